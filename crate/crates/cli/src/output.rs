use std::fmt::Write as _;
use std::io::Write as _;

use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};
use crate::CliError;

pub const TOOL: &str = "halfsine";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format_num(*v),
            Cell::Bool(v) => v.to_string(),
            Cell::Empty => String::new(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            // non-finite numbers have no JSON form
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(v.to_string()),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or very large magnitudes.
fn format_num(v: f64) -> String {
    let m = v.abs();
    if v != 0.0 && m.is_finite() && !(1e-4..1e15).contains(&m) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra `key=value` lines for the header (CSV) or top-level fields (JSON).
    pub notes: Vec<(String, Value)>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: Value) {
        self.notes.push((key.to_string(), value));
    }

    pub fn render(&self, cfg: &RunConfig) -> String {
        match cfg.format {
            Format::Csv => {
                let mut out = csv_header(cfg);
                for (k, v) in &self.notes {
                    let v = match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    let _ = writeln!(out, "# {k}={v}");
                }
                let _ = writeln!(out, "{}", self.columns.join(","));
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    let _ = writeln!(out, "{}", cells.join(","));
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> = self
                            .columns
                            .iter()
                            .zip(row)
                            .map(|(c, v)| (c.to_string(), v.json()))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut doc = json_header(cfg);
                for (k, v) in &self.notes {
                    doc.insert(k.clone(), v.clone());
                }
                doc.insert("rows".into(), Value::Array(rows));
                pretty(Value::Object(doc))
            }
        }
    }
}

pub fn csv_header(cfg: &RunConfig) -> String {
    format!("# {TOOL} {VERSION}\n# {}\n", cfg.echo())
}

pub fn json_header(cfg: &RunConfig) -> Map<String, Value> {
    let mut doc = Map::new();
    doc.insert("tool".into(), json!(TOOL));
    doc.insert("version".into(), json!(VERSION));
    doc.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    doc
}

pub fn pretty(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

pub fn emit(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}"))),
    }
}
