//! Tabular output shared by every command.

use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Str(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Str(v)
    }
}

/// Reals at 17 significant digits, so every value round-trips.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(v) => fmt_real(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Str(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Str(s) => Value::from(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>, CliError> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns).map_err(CliError::io)?;
                for r in &self.rows {
                    w.write_record(r.iter().map(Cell::text)).map_err(CliError::io)?;
                }
                w.into_inner().map_err(|e| CliError::Config(e.to_string()))
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        Value::Object(self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect::<Map<_, _>>())
                    })
                    .collect();
                let mut out = serde_json::to_vec_pretty(&rows).map_err(|e| CliError::Config(e.to_string()))?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }

    /// Write to `path`, or stdout when None.
    pub fn write(&self, path: Option<&Path>, format: Format) -> Result<(), CliError> {
        write_bytes(path, &self.render(format)?)
    }
}

pub fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Config(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(CliError::io),
    }
}
