//! CSV and JSON emission.
//!
//! Every CSV starts with `#` comment lines echoing the fully resolved
//! configuration, so a data file alone identifies the run that produced it.
//! Reals are written with 17 significant digits, which round-trips f64
//! exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Result;
use serde_json::{Map, Value};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits: exact round-trip for f64.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Resolved configuration as ordered key/value pairs; insertion order is the
/// echo order.
#[derive(Debug, Clone, Default)]
pub struct ResolvedConfig {
    pub command: String,
    pub entries: Vec<(String, String)>,
}

impl ResolvedConfig {
    pub fn new(command: &str) -> Self {
        ResolvedConfig {
            command: command.to_string(),
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    fn comment_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("# kickho {ARTIFACT_VERSION}"),
            format!("# command = {}", self.command),
        ];
        for (k, v) in &self.entries {
            lines.push(format!("# {k} = {v}"));
        }
        lines
    }

    fn json_map(&self) -> Map<String, Value> {
        let mut map = Map::new();
        map.insert("version".into(), Value::String(ARTIFACT_VERSION.into()));
        map.insert("command".into(), Value::String(self.command.clone()));
        let mut cfg = Map::new();
        for (k, v) in &self.entries {
            cfg.insert(k.clone(), Value::String(v.clone()));
        }
        map.insert("config".into(), Value::Object(cfg));
        map
    }
}

/// Write a CSV with config header comments, a column-name row, and data rows.
pub fn write_csv(
    path: &Path,
    config: &ResolvedConfig,
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for line in config.comment_lines() {
        writeln!(out, "{line}")?;
    }
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// JSON sidecar: the resolved config plus run-specific summary fields.
pub fn write_sidecar(path: &Path, config: &ResolvedConfig, summary: Value) -> Result<()> {
    let mut map = config.json_map();
    map.insert("summary".into(), summary);
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &Value::Object(map))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Minimal matplotlib script that plots the named CSV columns.
pub fn write_plot_script(
    path: &Path,
    csv_name: &str,
    xlabel: &str,
    ylabel: &str,
    kind: PlotKind,
) -> Result<()> {
    let body = match kind {
        PlotKind::Series { x_col, y_cols } => {
            let plots: Vec<String> = y_cols
                .iter()
                .map(|&(col, label)| {
                    format!("plt.plot(data[:, {x_col}], data[:, {col}], label=\"{label}\")")
                })
                .collect();
            format!(
                "data = np.loadtxt(\"{csv_name}\", delimiter=\",\", comments=\"#\", skiprows=skip)\n{}\nplt.legend()",
                plots.join("\n")
            )
        }
        PlotKind::Grid => format!(
            "data = np.loadtxt(\"{csv_name}\", delimiter=\",\", comments=\"#\", skiprows=skip)\n\
             x = np.unique(data[:, 0]); y = np.unique(data[:, 1])\n\
             z = data[:, 2].reshape(len(x), len(y)).T\n\
             plt.pcolormesh(x, y, z, shading=\"auto\")\n\
             plt.colorbar()"
        ),
        PlotKind::Scatter { x_col, y_col } => format!(
            "data = np.loadtxt(\"{csv_name}\", delimiter=\",\", comments=\"#\", skiprows=skip)\n\
             plt.scatter(data[:, {x_col}], data[:, {y_col}], s=4)"
        ),
    };
    let script = format!(
        "#!/usr/bin/env python3\n\
         import numpy as np\n\
         import matplotlib.pyplot as plt\n\n\
         # the header comment block is skipped by comments=\"#\"; the column\n\
         # name row needs one more skip\n\
         with open(\"{csv_name}\") as fh:\n\
         \x20   skip = sum(1 for line in fh if line.startswith(\"#\")) + 1\n\n\
         {body}\n\
         plt.xlabel(\"{xlabel}\")\n\
         plt.ylabel(\"{ylabel}\")\n\
         plt.tight_layout()\n\
         plt.show()\n"
    );
    std::fs::write(path, script)?;
    Ok(())
}

pub enum PlotKind {
    Series {
        x_col: usize,
        y_cols: Vec<(usize, &'static str)>,
    },
    Grid,
    Scatter {
        x_col: usize,
        y_col: usize,
    },
}
