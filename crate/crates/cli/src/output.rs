//! Tables and their CSV or JSON rendering, written atomically.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => format_real(*x),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Real(x) if x.is_finite() => json!(x),
            Cell::Real(x) => json!(format_real(*x)),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

fn format_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

/// Result of one command: named columns, rows, and extra blocks such as the oracle comparison.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub extra: Vec<(&'static str, Value)>,
}

impl Report {
    pub fn new(command: &'static str, columns: Vec<&'static str>) -> Self {
        Self { command, columns, rows: Vec::new(), extra: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, config: &RunConfig, format: Format) -> Result<String, CliError> {
        let cfg = serde_json::to_value(config).map_err(|e| CliError::Numerical(e.to_string()))?;
        match format {
            Format::Csv => {
                let mut s = String::new();
                s.push_str(&format!("# format_version: {}\n", qtment::FORMAT_VERSION));
                s.push_str(&format!("# command: {}\n", self.command));
                s.push_str(&format!("# config: {cfg}\n"));
                for (k, v) in &self.extra {
                    s.push_str(&format!("# {k}: {v}\n"));
                }
                s.push_str(&self.columns.join(","));
                s.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
                Ok(s)
            }
            Format::Json => {
                let mut doc = serde_json::Map::new();
                doc.insert("format_version".into(), json!(qtment::FORMAT_VERSION));
                doc.insert("command".into(), json!(self.command));
                doc.insert("config".into(), cfg);
                doc.insert("columns".into(), json!(self.columns));
                let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
                doc.insert("rows".into(), Value::Array(rows));
                for (k, v) in &self.extra {
                    doc.insert((*k).into(), v.clone());
                }
                let mut s = serde_json::to_string_pretty(&Value::Object(doc)).map_err(|e| CliError::Numerical(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
        }
    }
}

/// Writes `text` to `path` through a temporary file in the same directory, or to stdout.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
            out.flush().map_err(|e| CliError::Io(e.to_string()))
        }
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .map_err(|e| CliError::Io(format!("cannot create a file in {}: {e}", dir.display())))?;
            tmp.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
            tmp.as_file().sync_all().map_err(|e| CliError::Io(e.to_string()))?;
            tmp.persist(p).map_err(|e| CliError::Io(format!("cannot write {}: {}", p.display(), e.error)))?;
            Ok(())
        }
    }
}
