//! `key=value` configuration files and their merge with command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

/// Flat settings keyed by long flag name (without the leading `--`).
pub type Settings = BTreeMap<String, String>;

pub const KNOWN_KEYS: &[&str] = &[
    "preset", "strike", "rate", "vol", "maturity", "h", "xmax", "scheme", "gamma", "eps", "rho",
    "method", "k", "spots", "out", "b6", "ladder", "refine", "rhos", "ks", "steps",
];

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse(text: &str) -> Result<Settings, String> {
    let mut out = Settings::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value, got {raw:?}", n + 1))?;
        let key = k.trim().trim_start_matches("--").to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(format!("line {}: unknown key {key:?}", n + 1));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Settings, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse(&text)
}
