use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arrange-count"))
        .args(args)
        .env_remove("ARRANGE_COUNT_CACHE")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

#[test]
fn charpoly_text() {
    let out = stdout(&["charpoly", "--n", "5", "--d", "2"]);
    assert!(out.contains("chi_{n,d}(t) = t^3 - 10t^2 + 30t - 21"));
    assert!(out.contains("chi(A_{n,d}, t) = t^2 - 10t + 30"));
    assert!(out.contains("mu(max) = -21"));
}

#[test]
fn charpoly_by_k() {
    let out = stdout(&["charpoly", "--k", "0", "--d", "3"]);
    assert!(out.contains("t^4 - 4t^3 + 6t^2 - 4t + 1"));
    let out = stdout(&["charpoly", "--n", "5", "--d", "4"]);
    assert!(out.contains("t^5 - 5t^4 + 10t^3 - 10t^2 + 5t - 1"));
    let out = stdout(&["charpoly", "--n", "6", "--d", "4"]);
    assert!(out.contains("mu(max) = -120"));
    let out = stdout(&["charpoly", "--k", "2", "--d", "4", "--source", "disc"]);
    assert!(out.contains("t^5 - 35t^4 + 490t^3 - 3381t^2 + 10815t - 7890"));
}

#[test]
fn charpoly_json_round_trip() {
    let out = stdout(&["--format", "json", "charpoly", "--n", "6", "--d", "3"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["k"], 2);
    assert_eq!(v["mu_max"], "300");
    let coeffs: Vec<&str> = v["char_poly"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap())
        .collect();
    assert_eq!(coeffs, ["1", "-20", "145", "-426", "300"]);
    let deconed: Vec<&str> = v["deconed"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap())
        .collect();
    assert_eq!(deconed, ["1", "-20", "145", "-426"]);
    let total: u64 = v["types"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|t| t["gamma"].as_array().unwrap().len() == 1)
        .map(|t| t["lambda"].as_str().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 20 + 15 + 6);
}

#[test]
fn lambda_and_cvalue() {
    assert!(stdout(&["lambda", "--n", "8", "--d", "5", "--gamma", "2,2,1"]).starts_with("lambda_{8,5}(2^2 1) = 5040"));
    assert!(stdout(&["lambda", "--n", "6", "--d", "3", "--gamma", "4"]).starts_with("lambda_{6,3}(4) = 1"));
    assert_eq!(
        stdout(&["cvalue", "--j", "9", "--d", "3", "--gamma", "1,1,1"]).trim(),
        "1680"
    );
    assert_eq!(
        stdout(&["cvalue", "--j", "12", "--d", "4", "--gamma", "1,1,1"]).trim(),
        "34650"
    );
    assert_eq!(
        stdout(&["cvalue", "--j", "3", "--d", "4", "--gamma", "1,1,1"]).trim(),
        "0"
    );
}

#[test]
fn table1_formats() {
    let out = stdout(&["--format", "csv", "table1", "--dmax", "1"]);
    assert_eq!(
        out.lines().collect::<Vec<_>>(),
        ["gamma,d=1", "(1),4", "(2),1", "(1^2),0"]
    );
    let out = stdout(&["--format", "csv", "table1", "--dmax", "3"]);
    assert!(out.lines().any(|l| l == "(1^3),0,0,120"));
    let out = stdout(&["--format", "csv", "table1", "--dmax", "5"]);
    assert!(out.lines().any(|l| l == "(1^5),0,0,0,0,70560"));
    let out = stdout(&["--format", "latex", "table1", "--dmax", "2"]);
    assert!(out.contains("\\begin{tabular}"));
}

#[test]
fn table1_budget() {
    assert_eq!(code(&["table1", "--dmax", "8"]), 2);
    let out = stdout(&["--format", "csv", "table1", "--dmax", "8", "--allow-partial"]);
    assert!(out.lines().any(|l| l.starts_with("(1),4,") && l.ends_with(",-")));
}

#[test]
fn v2_listing() {
    assert_eq!(stdout(&["v2", "--l", "6", "--count-only"]).trim(), "133787");
    let out = stdout(&["v2", "--l", "2"]);
    assert!(out.contains("2 complexes"));
    assert!(out.contains("{{1,2}}"));
    assert_eq!(code(&["v2", "--l", "8"]), 2);
}

#[test]
fn verify_grid() {
    for (n, d) in [("4", "2"), ("5", "3"), ("4", "1")] {
        let out = stdout(&["verify", "--n", n, "--d", d, "--seeds", "1,2,3"]);
        assert_eq!(out.lines().last(), Some("PASS"), "{out}");
    }
    assert!(stdout(&["verify", "--n", "4", "--d", "2"]).contains("t^3 - 6t^2 + 11t - 6"));
    assert_eq!(code(&["verify", "--n", "12", "--d", "5"]), 2);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["charpoly", "--n", "2", "--d", "3"]), 1);
    assert_eq!(code(&["lambda", "--n", "5", "--d", "2", "--gamma", "x"]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["charpoly", "--n", "5", "--d", "2"]), 0);
}

#[test]
fn cache_file() {
    let dir = std::env::temp_dir().join(format!("arrange-count-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path: PathBuf = dir.join("cache.json");
    let p = path.to_str().unwrap();
    let first = stdout(&["--cache", p, "charpoly", "--n", "7", "--d", "4"]);
    let text = std::fs::read_to_string(&path).unwrap();
    let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&text).unwrap();
    assert!(!map.is_empty());
    assert!(map.values().all(|v| v.is_string()));
    let second = stdout(&["--cache", p, "charpoly", "--n", "7", "--d", "4"]);
    assert_eq!(first, second);
    std::fs::write(&path, "{\"bogus\": \"1\"}").unwrap();
    assert_ne!(code(&["--cache", p, "charpoly", "--n", "5", "--d", "2"]), 0);
    std::fs::remove_dir_all(&dir).unwrap();
}
