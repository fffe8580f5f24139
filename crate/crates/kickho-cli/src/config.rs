//! Flat key=value configuration files.
//!
//! A config file supplies defaults; flags given on the command line win.
//! Keys use the flag spelling without the leading dashes. Unknown keys are
//! rejected before anything runs.

use std::path::Path;

use anyhow::{bail, Context, Result};

/// Every long flag a config file may set.
const KNOWN_KEYS: &[&str] = &[
    "K",
    "q",
    "eta",
    "kicks",
    "initial",
    "displaced-coords",
    "basis",
    "basis-cap",
    "eta-from",
    "eta-to",
    "eta-step",
    "threshold",
    "marker",
    "refine-tol",
    "max-grid-gap",
    "classify-radius",
    "ensemble-size",
    "seed",
    "traj-kicks",
    "start-v",
    "start-u",
    "grid-half",
    "grid-bins",
    "half",
    "nodes",
    "select",
    "basis-list",
    "threads",
    "out-dir",
];

/// Parse `key = value` lines; '#' starts a comment, blank lines are skipped.
pub fn parse_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!(
                "{}:{}: expected key = value, got {raw:?}",
                path.display(),
                lineno + 1
            );
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            bail!(
                "{}:{}: unknown config key {key:?}",
                path.display(),
                lineno + 1
            );
        }
        pairs.push((key, value));
    }
    Ok(pairs)
}

/// Append config pairs as flags for every key not already given on the
/// command line, so explicit flags take precedence.
pub fn merge_into_args(mut args: Vec<String>, pairs: &[(String, String)]) -> Vec<String> {
    for (key, value) in pairs {
        let flag = format!("--{key}");
        if !args.iter().any(|a| a == &flag || a.starts_with(&format!("{flag}="))) {
            args.push(flag);
            args.push(value.clone());
        }
    }
    args
}
