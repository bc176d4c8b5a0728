//! Structured report (JSON), CSV tables and the timing sidecar.
//!
//! The report carries no wall-clock data, so a single-threaded run writes the
//! same bytes every time. Timings go to `timings.json`.

use serde::Serialize;
use serde_json::Value;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Bumped whenever a CSV column contract changes.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub format_version: u32,
    pub seed: u64,
    pub threads: usize,
    pub tolerance: f64,
    pub results: Vec<RequestResult>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RequestResult {
    pub index: usize,
    pub op: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    /// CSV files written for this request.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<String>,
    #[serde(skip)]
    pub table_data: Vec<Table>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorEntry {
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&'static str]) -> Self {
        Table {
            name: name.to_string(),
            headers: headers.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn file_name(&self, index: usize, op: &str) -> String {
        format!("{index:02}_{op}_{}.csv", self.name)
    }
}

/// Shortest round-trip formatting; empty for missing values.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub index: usize,
    pub op: String,
    pub seconds: f64,
}

/// Writes `report.json`, every table and `timings.json` into `dir`.
pub fn write_outputs(dir: &Path, report: &Report, timings: &[Timing]) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for r in &report.results {
        for t in &r.table_data {
            let path = dir.join(t.file_name(r.index, &r.op));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(&t.headers)?;
            for row in &t.rows {
                w.write_record(row)?;
            }
            w.flush()?;
            written.push(path);
        }
    }
    let path = dir.join("report.json");
    fs::write(&path, to_json(report)? + "\n")?;
    written.push(path);
    let path = dir.join("timings.json");
    fs::write(&path, to_json(&timings)? + "\n")?;
    written.push(path);
    Ok(written)
}

fn to_json<T: Serialize>(v: &T) -> io::Result<String> {
    serde_json::to_string_pretty(v).map_err(io::Error::other)
}
