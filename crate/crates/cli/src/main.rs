use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use arrange_core::arith::{partitions_of, Partition};
use arrange_core::cache;
use arrange_core::charpoly::{CharPolyResult, Engine, LambdaSource};
use arrange_core::counting::{c_support_max, lambda_via_c_with};
use arrange_core::disc::{count_v2, enumerate_v2, lambda_disc_in, MAX_V2_LENGTH, MAX_V2_LIST_LENGTH};
use arrange_core::geom::oracle_char_poly;
use arrange_core::Error;

/// Largest `d` at which `charpoly --k 2` also runs the occupancy-pattern path.
const CROSS_CHECK_MAX_D: u32 = 6;

#[derive(Parser, Debug)]
#[command(
    name = "arrange-count",
    version,
    about = "Intersection lattices of arrangements generated by generic points"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,

    /// JSON cache of c values and simplicial-complex counts.
    #[arg(long, global = true, env = "ARRANGE_COUNT_CACHE")]
    cache: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Latex,
    Text,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Source {
    Auto,
    Counting,
    Disc,
}

impl From<Source> for LambdaSource {
    fn from(s: Source) -> Self {
        match s {
            Source::Auto => LambdaSource::Auto,
            Source::Counting => LambdaSource::Counting,
            Source::Disc => LambdaSource::Disc,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Characteristic polynomial of L_{n,d}, with the per-type table.
    Charpoly {
        #[arg(long, conflicts_with = "k")]
        n: Option<u32>,
        #[arg(long)]
        d: u32,
        /// Use n = d + k + 1.
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, value_enum, default_value_t = Source::Auto)]
        source: Source,
    },
    /// Number of lattice elements of a given type.
    Lambda {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        d: u32,
        /// Comma-separated parts, e.g. 2,2,1.
        #[arg(long, value_parser = parse_partition)]
        gamma: Partition,
    },
    /// Pattern count c(j, d; gamma).
    Cvalue {
        #[arg(long)]
        j: u64,
        #[arg(long)]
        d: u32,
        #[arg(long, value_parser = parse_partition)]
        gamma: Partition,
    },
    /// Type counts of L_{d+3,d} for d = 1..dmax.
    Table1 {
        #[arg(long, default_value_t = 5)]
        dmax: u32,
        /// Print the columns that fit the budget instead of failing.
        #[arg(long)]
        allow_partial: bool,
    },
    /// Simplicial complexes on l vertices used for k = 2.
    V2 {
        #[arg(long)]
        l: usize,
        #[arg(long)]
        count_only: bool,
    },
    /// Compare the geometric lattice of random points with the counting engine.
    Verify {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u64, 2, 3])]
        seeds: Vec<u64>,
    },
}

fn parse_partition(s: &str) -> Result<Partition, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Partition::empty());
    }
    let parts = s
        .split(',')
        .map(|p| match p.trim().parse::<u32>() {
            Ok(0) => Err(format!("part {p:?} must be positive")),
            Ok(v) => Ok(v),
            Err(_) => Err(format!("part {p:?} is not a positive integer")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Partition::new(parts))
}

enum Failure {
    Usage(String),
    Budget(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Budget { .. } => Failure::Budget(e.to_string()),
            Error::Verification(_) | Error::Degenerate(_) => Failure::Verification(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

/// A rendered result plus whether it reports a failed check.
struct Output {
    text: String,
    failed: Option<String>,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, failed: None }
    }
}

fn csv_row(cells: &[String]) -> String {
    cells
        .iter()
        .map(|c| {
            if c.contains([',', '"', '\n']) {
                format!("\"{}\"", c.replace('"', "\"\""))
            } else {
                c.clone()
            }
        })
        .collect::<Vec<_>>()
        .join(",")
}

fn latex_label(g: &Partition) -> String {
    g.exponent_label()
        .replace('^', "^{")
        .split(' ')
        .map(close_braces)
        .collect::<Vec<_>>()
        .join(" ")
}

fn close_braces(tok: &str) -> String {
    match tok.find("^{") {
        Some(i) => {
            let (head, tail) = tok.split_at(i + 2);
            let digits: String = tail.chars().take_while(char::is_ascii_digit).collect();
            let rest = &tail[digits.len()..];
            format!("{head}{digits}}}{rest}")
        }
        None => tok.to_string(),
    }
}

fn latex_poly(p: &arrange_core::arith::IntegerPolynomial) -> String {
    let mut out = String::new();
    let mut rest = p.to_string();
    while let Some(i) = rest.find("t^") {
        let tail = &rest[i + 2..];
        let digits: String = tail.chars().take_while(char::is_ascii_digit).collect();
        out.push_str(&format!("{}t^{{{digits}}}", &rest[..i]));
        rest = tail[digits.len()..].to_string();
    }
    out + &rest
}

fn render_charpoly(r: &CharPolyResult, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(r).expect("serializable"),
        Format::Csv => {
            let mut out = vec![csv_row(&["gamma".into(), "lambda".into(), "mu".into()])];
            for e in &r.types {
                out.push(csv_row(&[e.gamma.comma_list(), e.lambda.to_string(), e.mu.to_string()]));
            }
            out.push(csv_row(&["max".into(), "1".into(), r.mu_max.to_string()]));
            out.join("\n")
        }
        Format::Latex => {
            let mut out = vec![format!("\\chi_{{{},{}}}(t) = {}", r.n, r.d, latex_poly(&r.cone))];
            out.push(format!(
                "\\chi(\\mathcal{{A}}_{{{},{}}}, t) = {}",
                r.n,
                r.d,
                latex_poly(&r.deconed)
            ));
            out.push("\\begin{tabular}{crr}".into());
            out.push("$\\gamma$ & $\\lambda$ & $\\mu$ \\\\ \\hline".into());
            for e in r.types.iter().filter(|e| !e.gamma.is_empty()) {
                out.push(format!("${}$ & {} & {} \\\\", latex_label(&e.gamma), e.lambda, e.mu));
            }
            out.push("\\end{tabular}".into());
            out.join("\n")
        }
        Format::Text => {
            let mut out = vec![
                format!("n = {}, d = {}, k = {}", r.n, r.d, r.k),
                format!("chi_{{n,d}}(t) = {}", r.cone),
                format!("chi(A_{{n,d}}, t) = {}", r.deconed),
                format!("mu(max) = {}", r.mu_max),
                String::new(),
                format!("{:<16} {:>24} {:>16}", "type", "lambda", "mu"),
            ];
            for e in &r.types {
                out.push(format!(
                    "{:<16} {:>24} {:>16}",
                    e.gamma.exponent_label(),
                    e.lambda,
                    e.mu
                ));
            }
            out.join("\n")
        }
    }
}

fn cmd_charpoly(
    engine: &Engine,
    n: Option<u32>,
    d: u32,
    k: Option<u32>,
    source: Source,
    format: Format,
) -> Result<Output, Failure> {
    let n = match (n, k) {
        (Some(n), None) => n,
        (None, Some(k)) => d + k + 1,
        _ => return Err(Failure::Usage("give either --n or --k together with --d".into())),
    };
    if n <= d {
        return Err(Failure::Usage(format!("need n > d, got n={n}, d={d}")));
    }
    let source: LambdaSource = source.into();
    let result = engine.char_poly(n, d, source)?;
    let mut out = Output::ok(render_charpoly(&result, format));
    let used_disc = n == d + 3 && source != LambdaSource::Counting && d as usize <= MAX_V2_LENGTH;
    if used_disc && d <= CROSS_CHECK_MAX_D {
        let other = engine.char_poly(n, d, LambdaSource::Counting)?;
        if other.cone != result.cone || other.types != result.types {
            out.failed = Some("the two counting paths disagree".into());
        }
    }
    Ok(out)
}

fn cmd_lambda(engine: &Engine, n: u32, d: u32, gamma: &Partition, format: Format) -> Result<Output, Failure> {
    if n > 64 {
        return Err(Failure::Usage("n is limited to 64".into()));
    }
    let dec = lambda_via_c_with(&engine.c_table, n as u64, d, gamma)?;
    let mut failed = None;
    if n == d + 3 && gamma.weight() <= d && !gamma.is_empty() && gamma.len() <= MAX_V2_LENGTH {
        let other = lambda_disc_in(&engine.v2, d, gamma)?;
        if other != dec.lambda {
            failed = Some(format!("simplicial-complex count {other} differs"));
        }
    }
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&json!({
            "n": n,
            "d": d,
            "gamma": gamma.parts(),
            "lambda": dec.lambda.to_string(),
            "terms": dec.terms.iter().map(|(j, c)| json!({"j": j, "c": c.to_string()})).collect::<Vec<_>>(),
        }))
        .expect("serializable"),
        Format::Csv => {
            let mut rows = vec![csv_row(&["j".into(), "c".into()])];
            rows.extend(dec.terms.iter().map(|(j, c)| csv_row(&[j.to_string(), c.to_string()])));
            rows.push(csv_row(&["lambda".into(), dec.lambda.to_string()]));
            rows.join("\n")
        }
        Format::Latex => format!("\\lambda_{{{n},{d}}}{} = {}", latex_label(gamma), dec.lambda),
        Format::Text => {
            let mut rows = vec![format!("lambda_{{{n},{d}}}{} = {}", gamma.exponent_label(), dec.lambda)];
            for (j, c) in &dec.terms {
                rows.push(format!("  j = {j:>3}  c = {c}"));
            }
            rows.join("\n")
        }
    };
    Ok(Output { text, failed })
}

fn cmd_cvalue(engine: &Engine, j: u64, d: u32, gamma: &Partition, format: Format) -> Result<Output, Failure> {
    if gamma.is_empty() {
        return Err(Failure::Usage("gamma must be nonempty".into()));
    }
    let v = if j > c_support_max(d, gamma) {
        Default::default()
    } else {
        engine.c_table.c_value(j, d, gamma)?
    };
    Ok(Output::ok(match format {
        Format::Json => {
            serde_json::to_string_pretty(&json!({"j": j, "d": d, "gamma": gamma.parts(), "c": v.to_string()}))
                .expect("serializable")
        }
        Format::Csv => format!(
            "j,d,gamma,c\n{}",
            csv_row(&[j.to_string(), d.to_string(), gamma.comma_list(), v.to_string()])
        ),
        Format::Latex => format!("c({j},{d};{}) = {v}", latex_label(gamma)),
        Format::Text => v.to_string(),
    }))
}

fn cmd_table1(engine: &Engine, dmax: u32, allow_partial: bool, format: Format) -> Result<Output, Failure> {
    if dmax == 0 {
        return Err(Failure::Usage("--dmax must be at least 1".into()));
    }
    let rows: Vec<Partition> = (1..=dmax.max(2)).flat_map(partitions_of).collect();
    let mut columns: Vec<Option<Vec<String>>> = Vec::new();
    for d in 1..=dmax {
        if d as usize > MAX_V2_LENGTH {
            let e = Error::budget(
                format!("column d = {d}"),
                format!("complexes on {d} vertices"),
                format!("{MAX_V2_LENGTH} vertices"),
            );
            if allow_partial {
                eprintln!("skipping column d = {d}: {e}");
                columns.push(None);
                continue;
            }
            return Err(e.into());
        }
        let mut col = Vec::new();
        for g in &rows {
            let v = if g.weight() > d {
                u32::from(g.len() == 1 && g.parts()[0] == d + 1).into()
            } else {
                lambda_disc_in(&engine.v2, d, g)?
            };
            col.push(v.to_string());
        }
        columns.push(Some(col));
    }
    let cell = |c: &Option<Vec<String>>, i: usize| c.as_ref().map_or("-".to_string(), |v| v[i].clone());
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&json!({
            "dmax": dmax,
            "columns": (1..=dmax).collect::<Vec<_>>(),
            "rows": rows.iter().enumerate().map(|(i, g)| json!({
                "gamma": g.parts(),
                "label": g.exponent_label(),
                "values": columns.iter().map(|c| c.as_ref().map_or(Value::Null, |v| Value::String(v[i].clone()))).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        }))
        .expect("serializable"),
        Format::Csv => {
            let mut head = vec!["gamma".to_string()];
            head.extend((1..=dmax).map(|d| format!("d={d}")));
            let mut out = vec![csv_row(&head)];
            for (i, g) in rows.iter().enumerate() {
                let mut r = vec![g.exponent_label()];
                r.extend(columns.iter().map(|c| cell(c, i)));
                out.push(csv_row(&r));
            }
            out.join("\n")
        }
        Format::Latex => {
            let mut out = vec![
                format!("\\begin{{tabular}}{{c{}}}", "r".repeat(dmax as usize)),
                format!(
                    "$\\gamma$ {} \\\\ ",
                    (1..=dmax).map(|d| format!("&$d= {d} $ ")).collect::<String>()
                ),
            ];
            let mut last_weight = 0;
            for (i, g) in rows.iter().enumerate() {
                if g.weight() != last_weight {
                    out.push("\\hline".into());
                    last_weight = g.weight();
                }
                let label = latex_label(g).replace('(', "( ").replace(')', " )");
                let cells: String = columns.iter().map(|c| format!(" & {}", cell(c, i))).collect();
                out.push(format!("$ {label}${cells} \\\\ "));
            }
            out.push("\\hline".into());
            out.push("\\end{tabular}".into());
            out.join("\n")
        }
        Format::Text => {
            let mut out = vec![format!(
                "{:<14}{}",
                "gamma",
                (1..=dmax).map(|d| format!("{:>12}", format!("d={d}"))).collect::<String>()
            )];
            for (i, g) in rows.iter().enumerate() {
                let cells: String = columns.iter().map(|c| format!("{:>12}", cell(c, i))).collect();
                out.push(format!("{:<14}{cells}", g.exponent_label()));
            }
            out.join("\n")
        }
    };
    Ok(Output::ok(text))
}

fn cmd_v2(engine: &Engine, l: usize, count_only: bool, format: Format) -> Result<Output, Failure> {
    if count_only {
        let table = match engine.v2.cached(l) {
            Some(t) => t,
            None => {
                let t = count_v2(l)?;
                engine.v2.insert(t);
                engine.v2.cached(l).expect("just inserted")
            }
        };
        let text = match format {
            Format::Json => serde_json::to_string_pretty(&json!({
                "l": l,
                "count": table.total().to_string(),
                "by_profile": table.entries().map(|(a, t, c)| json!({"alpha": a, "t": t, "count": c.to_string()})).collect::<Vec<_>>(),
            }))
            .expect("serializable"),
            Format::Csv => {
                let mut out = vec!["alpha,t,count".to_string()];
                out.extend(table.entries().map(|(a, t, c)| {
                    csv_row(&[a.iter().map(u32::to_string).collect::<Vec<_>>().join(" "), t.to_string(), c.to_string()])
                }));
                out.join("\n")
            }
            Format::Latex => format!("|\\mathcal{{V}}_2({l})| = {}", table.total()),
            Format::Text => table.total().to_string(),
        };
        return Ok(Output::ok(text));
    }
    if l > MAX_V2_LIST_LENGTH {
        return Err(Error::budget("listing of complexes", format!("l = {l}"), MAX_V2_LIST_LENGTH).into());
    }
    let list = enumerate_v2(l)?;
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&json!({
            "l": l,
            "count": list.len(),
            "complexes": list.iter().map(|c| json!({"facets": c.facet_lists(), "alpha": c.alpha()})).collect::<Vec<_>>(),
        }))
        .expect("serializable"),
        Format::Csv => {
            let mut out = vec!["index,facets,alpha".to_string()];
            for (i, c) in list.iter().enumerate() {
                let alpha = c.alpha().iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
                out.push(csv_row(&[i.to_string(), c.to_string(), alpha]));
            }
            out.join("\n")
        }
        Format::Latex => list.iter().map(|c| format!("\\{{{}\\}}", c.to_string().replace('{', "\\{").replace('}', "\\}"))).collect::<Vec<_>>().join("\\\\\n"),
        Format::Text => {
            let mut out = vec![format!("{} complexes", list.len())];
            out.extend(list.iter().map(|c| c.to_string()));
            out.join("\n")
        }
    };
    Ok(Output::ok(text))
}

fn cmd_verify(n: usize, d: usize, seeds: &[u64], format: Format) -> Result<Output, Failure> {
    if seeds.is_empty() {
        return Err(Failure::Usage("at least one seed is needed".into()));
    }
    let report = oracle_char_poly(n, d, seeds)?;
    let checks = [
        ("seeds agree", report.seeds_agree),
        ("rank sizes", report.rank_sizes_match),
        ("type counts", report.types_match),
        ("mobius", report.mobius_match),
        ("char poly", report.char_poly_match),
    ];
    let verdict = |b: bool| if b { "PASS" } else { "FAIL" };
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&json!({
            "n": n,
            "d": d,
            "seeds": report.seeds.iter().map(|s| s.seed).collect::<Vec<_>>(),
            "rank_sizes": report.expected_rank_sizes,
            "char_poly": report.expected_char_poly.descending().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "checks": checks.iter().map(|(k, v)| json!({"check": k, "result": verdict(*v)})).collect::<Vec<_>>(),
            "passed": report.passed(),
        }))
        .expect("serializable"),
        Format::Csv => {
            let mut out = vec!["check,result".to_string()];
            out.extend(checks.iter().map(|(k, v)| format!("{k},{}", verdict(*v))));
            out.join("\n")
        }
        Format::Latex | Format::Text => {
            let mut out = vec![
                format!(
                    "n = {n}, d = {d}, seeds {:?}",
                    report.seeds.iter().map(|s| s.seed).collect::<Vec<_>>()
                ),
                format!("rank sizes {:?}", report.expected_rank_sizes),
                format!("chi = {}", report.expected_char_poly),
            ];
            out.extend(checks.iter().map(|(k, v)| format!("{:<12} {}", k, verdict(*v))));
            out.push(verdict(report.passed()).to_string());
            out.join("\n")
        }
    };
    Ok(Output {
        text,
        failed: (!report.passed()).then(|| "geometric lattice disagrees with the counting engine".into()),
    })
}

fn run(cli: Cli) -> Result<Output, Failure> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let engine = Engine::new();
    if let Some(path) = &cli.cache {
        cache::load(path, &engine)?;
    }
    let started = Instant::now();
    let out = match &cli.command {
        Command::Charpoly { n, d, k, source } => cmd_charpoly(&engine, *n, *d, *k, *source, cli.format),
        Command::Lambda { n, d, gamma } => cmd_lambda(&engine, *n, *d, gamma, cli.format),
        Command::Cvalue { j, d, gamma } => cmd_cvalue(&engine, *j, *d, gamma, cli.format),
        Command::Table1 { dmax, allow_partial } => cmd_table1(&engine, *dmax, *allow_partial, cli.format),
        Command::V2 { l, count_only } => cmd_v2(&engine, *l, *count_only, cli.format),
        Command::Verify { n, d, seeds } => cmd_verify(*n, *d, seeds, cli.format),
    }?;
    if let Some(path) = &cli.cache {
        cache::save(path, &engine)?;
    }
    if std::env::var_os("ARRANGE_COUNT_TIMING").is_some() {
        eprintln!("elapsed {:?}", started.elapsed());
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(out) => {
            let _ = writeln!(std::io::stdout(), "{}", out.text);
            match out.failed {
                Some(msg) => {
                    eprintln!("verification failed: {msg}");
                    ExitCode::from(3)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("refused: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
