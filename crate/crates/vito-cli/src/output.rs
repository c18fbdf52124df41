//! Deterministic artifact writers: CSV tables and the JSON run report.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct CsvTable {
    /// File stem suffix, e.g. "moments" -> <prefix>_moments.csv.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(name: &str, header: &[&str]) -> Self {
        CsvTable {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest-roundtrip decimal form; stable across runs and platforms.
pub fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

pub fn fmt_usize(v: usize) -> String {
    format!("{v}")
}

/// Writes one table as CSV: a config-hash comment line, the header, rows.
pub fn write_table(
    out_dir: &Path,
    prefix: &str,
    hash: &str,
    table: &CsvTable,
) -> std::io::Result<PathBuf> {
    let path = out_dir.join(format!("{prefix}_{}.csv", table.name));
    let mut buf = String::new();
    buf.push_str(&format!("# config_hash = {hash}\n"));
    buf.push_str(&table.header.join(","));
    buf.push('\n');
    for row in &table.rows {
        buf.push_str(&row.join(","));
        buf.push('\n');
    }
    let mut file = fs::File::create(&path)?;
    file.write_all(buf.as_bytes())?;
    Ok(path)
}

/// JSON envelope: the only artifact carrying a timestamp.
pub fn write_report(
    out_dir: &Path,
    prefix: &str,
    report: &serde_json::Value,
) -> std::io::Result<PathBuf> {
    let path = out_dir.join(format!("{prefix}_report.json"));
    let mut file = fs::File::create(&path)?;
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(path)
}
