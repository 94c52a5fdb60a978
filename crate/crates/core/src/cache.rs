//! JSON persistence of `c` values and `𝒱₂` count tables.
//!
//! The file is one JSON object from key strings to decimal strings. `c`
//! values use `"j|d|γ1,γ2,.."`; count tables use `"v2|l|α1,..,αl|t"` plus a
//! `"v2|l|total"` marker written only for complete tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num::bigint::BigUint;

use crate::charpoly::Engine;
use crate::counting::CTable;
use crate::disc::V2CountTable;
use crate::error::{Error, Result};

/// Loads every entry of `path` into `engine`. A missing file is not an error.
pub fn load(path: &Path, engine: &Engine) -> Result<usize> {
    if !path.exists() {
        return Ok(0);
    }
    let text = fs::read_to_string(path)?;
    let map: BTreeMap<String, String> =
        serde_json::from_str(&text).map_err(|e| Error::Cache(format!("{}: {e}", path.display())))?;
    let mut loaded = 0;
    let mut v2_lengths = Vec::new();
    for (key, value) in &map {
        if let Some(rest) = key.strip_prefix("v2|") {
            if let Some(l) = rest.strip_suffix("|total").and_then(|l| l.parse::<usize>().ok()) {
                v2_lengths.push(l);
            }
            continue;
        }
        let (j, d, gamma) = CTable::parse_key(key).ok_or_else(|| Error::Cache(format!("unrecognized key {key:?}")))?;
        let v: BigUint = value
            .parse()
            .map_err(|_| Error::Cache(format!("value of {key:?} is not a decimal integer")))?;
        engine.c_table.insert(j, d, gamma, v);
        loaded += 1;
    }
    for l in v2_lengths {
        let prefix = format!("v2|{l}|");
        let entries = map.iter().filter(|(k, _)| k.starts_with(&prefix));
        let table = V2CountTable::from_strings(l, entries)
            .ok_or_else(|| Error::Cache(format!("count table for l = {l} is inconsistent")))?;
        engine.v2.insert(table);
        loaded += 1;
    }
    Ok(loaded)
}

/// Writes every entry held by `engine` to `path`, merged over what the file already holds.
pub fn save(path: &Path, engine: &Engine) -> Result<()> {
    let mut map: BTreeMap<String, String> = if path.exists() {
        serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::Cache(format!("{}: {e}", path.display())))?
    } else {
        BTreeMap::new()
    };
    map.extend(engine.c_table.to_strings());
    for l in engine.v2.lengths() {
        if let Some(t) = engine.v2.cached(l) {
            map.extend(t.to_strings());
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_string_pretty(&map)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
