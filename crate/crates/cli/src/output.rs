//! Report serialization: one `report.json` per invocation plus CSV tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use mtmeval::InputDigest;
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub const TOOL: &str = "mtmeval";

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: BTreeMap<String, Value>,
    pub inputs: Vec<InputDigest>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub coverage: BTreeMap<String, f64>,
    pub rows: Vec<Value>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: BTreeMap::new(),
            inputs: Vec::new(),
            coverage: BTreeMap::new(),
            rows: Vec::new(),
        }
    }

    pub fn echo(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).unwrap_or(Value::Null);
        self.config.insert(key.to_string(), value);
    }
}

/// A CSV table written under `tables/`.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| escape(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn escape(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// `×100` with two decimals, as in published tables; `NA` when undefined.
pub fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{:.2}", v * 100.0))
}

pub fn fixed2(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.2}"))
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

/// Writes tables, extra files, and finally `report.json`, sequentially.
pub fn write_outputs(
    out_dir: &Path,
    report: &Report,
    tables: &[Table],
    extra: &[(PathBuf, Vec<u8>)],
) -> Result<(), CliError> {
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    for table in tables {
        let path = out_dir.join("tables").join(format!("{}.csv", table.name));
        write_file(&path, table.to_csv().as_bytes())?;
    }
    for (rel, bytes) in extra {
        write_file(&out_dir.join(rel), bytes)?;
    }
    let mut json = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Validation(format!("serializing report: {e}")))?;
    json.push('\n');
    write_file(&out_dir.join("report.json"), json.as_bytes())
}

/// Echoes a table to stdout with aligned columns.
pub fn print_table(table: &Table) {
    let mut widths: Vec<usize> = table.header.iter().map(|h| h.len()).collect();
    for row in &table.rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    println!("{}", line(table.header.clone()));
    for row in &table.rows {
        println!("{}", line(row.iter().map(String::as_str).collect()));
    }
}
