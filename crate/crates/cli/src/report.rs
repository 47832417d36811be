//! Key-value reports and tables, rendered as text (`key = value`, CSV) or JSON.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Text,
    Structured,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Flag(bool),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(n) => json!(n),
            Cell::Text(s) => json!(s),
            Cell::Flag(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Flag(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// Ordered key-value report.
#[derive(Debug, Clone, Default)]
pub struct Report(Vec<(String, Cell)>);

impl Report {
    pub fn push(&mut self, key: impl Into<String>, value: impl Into<Cell>) {
        self.0.push((key.into(), value.into()));
    }

    pub fn extend(&mut self, other: Report) {
        self.0.extend(other.0);
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Text => self.0.iter().map(|(k, v)| format!("{k} = {}\n", v.text())).collect(),
            ReportFormat::Structured => {
                let map: serde_json::Map<String, Value> = self.0.iter().map(|(k, v)| (k.clone(), v.json())).collect();
                pretty(&Value::Object(map))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns.len(), "table row width");
        self.rows.push(cells);
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Text => {
                let mut out = self.columns.join(",");
                out.push('\n');
                for row in &self.rows {
                    out.push_str(&row.iter().map(Cell::text).collect::<Vec<_>>().join(","));
                    out.push('\n');
                }
                out
            }
            ReportFormat::Structured => {
                let rows: Vec<Value> =
                    self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
                pretty(&json!({ "columns": self.columns, "rows": rows }))
            }
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// `stem.csv` / `stem.txt` for text, `stem.json` for structured output.
pub fn path(dir: &Path, stem: &str, format: ReportFormat, table: bool) -> PathBuf {
    let ext = match (format, table) {
        (ReportFormat::Structured, _) => "json",
        (ReportFormat::Text, true) => "csv",
        (ReportFormat::Text, false) => "txt",
    };
    dir.join(format!("{stem}.{ext}"))
}

/// `first..last` runs, `;`-separated.
pub fn intervals(runs: &[(f64, f64)]) -> String {
    if runs.is_empty() {
        return "none".to_string();
    }
    runs.iter().map(|(a, b)| format!("{a}..{b}")).collect::<Vec<_>>().join(";")
}

/// Runs of consecutive `true` flags as `(first, last)` phases.
pub fn runs(phases: &[f64], flags: &[bool]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, (&phi, &on)) in phases.iter().zip(flags).enumerate() {
        if on {
            start.get_or_insert(phi);
            if i + 1 == flags.len() || !flags[i + 1] {
                out.push((start.take().expect("open run"), phi));
            }
        }
    }
    out
}
