//! Versioned JSON reports and CSV tables.

use std::path::{Path, PathBuf};

use serde::Serialize;

pub const SCHEMA: &str = "cmg-report/1";

/// A single numeric claim and the tolerance it was judged against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: &'static str,
    /// threshold for inequalities, 0 for exact comparisons
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    pub passed: bool,
}

impl Check {
    pub fn le(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, relation: "<=", tolerance, expected: None, passed: value <= tolerance }
    }

    pub fn ge(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, relation: ">=", tolerance, expected: None, passed: value >= tolerance }
    }

    pub fn gt(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, relation: ">", tolerance: bound, expected: None, passed: value > bound }
    }

    pub fn eq(name: impl Into<String>, value: f64, expected: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: "==",
            tolerance: 0.0,
            expected: Some(expected),
            passed: value == expected,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::eq(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub kind: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub toolkit_version: &'static str,
    pub command: String,
    pub inputs: serde_json::Value,
    pub results: serde_json::Value,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<Diagnostic>,
    /// only present with `--timing`, so default reports stay byte-reproducible
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

/// Rows for a CSV file, written next to the JSON report.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }
}

pub fn report_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os("CMG_REPORT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("reports"))
}

pub fn write(dir: &Path, report: &RunReport, table: Option<&Table>) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.json", report.command));
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(&path, text)?;
    if let Some(table) = table {
        let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", report.command)))?;
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    Ok(path)
}
