use anyhow::{bail, Context, Result};
use serde_json::{Map, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::{Format, RunConfig};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
    S(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::U(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::F)
    }
}

impl Cell {
    /// `{:?}` on `f64` is the shortest string that parses back to the same
    /// value.
    fn csv(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:?}"),
            Cell::U(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::U(v) => Value::from(*v),
            Cell::B(v) => Value::Bool(*v),
            Cell::S(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        Ok(w.into_inner()?)
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.header.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// A command's result: the main table and an optional surface table.
pub struct Report {
    pub command: &'static str,
    pub rows: Table,
    pub surface: Option<Table>,
}

fn surface_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.surface.csv"))
}

fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            Ok(out.flush()?)
        }
    }
}

/// CSV writes the main table to `out` (or stdout) and the surface next to
/// it as `<stem>.surface.csv`. JSON writes one document holding the
/// config, the rows and the surface.
pub fn emit(report: &Report, config: &RunConfig) -> Result<()> {
    let out = config.out.as_deref();
    match config.format {
        Format::Csv => {
            if let Some(surface) = &report.surface {
                let Some(out) = out else {
                    bail!("--emit-surface with CSV output needs --out");
                };
                write_bytes(Some(&surface_path(out)), &surface.to_csv()?)?;
            }
            write_bytes(out, &report.rows.to_csv()?)
        }
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("command".into(), Value::from(report.command));
            doc.insert("config".into(), serde_json::to_value(config)?);
            doc.insert("rows".into(), report.rows.to_json());
            if let Some(surface) = &report.surface {
                doc.insert("surface".into(), surface.to_json());
            }
            let mut bytes = serde_json::to_vec_pretty(&Value::Object(doc))?;
            bytes.push(b'\n');
            write_bytes(out, &bytes)
        }
    }
}
