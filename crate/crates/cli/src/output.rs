//! Result tables and their CSV/JSON encodings.
//!
//! Floats are written as `{:.16e}` (17 significant digits) in CSV and as
//! shortest round-trip numbers in JSON, with non-finite values as `NaN`/`null`.

use std::io::Write;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(v) if v.is_nan() => "NaN".into(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub cells: Vec<Cell>,
    /// `None` for success, otherwise the error text.
    pub error: Option<String>,
}

impl Row {
    pub fn ok(cells: Vec<Cell>) -> Self {
        Self { cells, error: None }
    }

    /// Keeps the input columns and fills the outputs with NaN.
    pub fn failed(inputs: Vec<Cell>, n_outputs: usize, error: String) -> Self {
        let mut cells = inputs;
        cells.extend(std::iter::repeat_n(Cell::Float(f64::NAN), n_outputs));
        Self { cells, error: Some(error) }
    }

    pub fn status(&self) -> String {
        match &self.error {
            None => "ok".into(),
            Some(e) => format!("error: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

/// SHA-256 of the canonical JSON text of the resolved configuration.
pub fn config_hash(config: &Value) -> String {
    hex::encode(Sha256::digest(config.to_string().as_bytes()))
}

fn all_columns(t: &Table) -> Vec<&'static str> {
    let mut c = t.columns.clone();
    c.extend(["status", "config_hash"]);
    c
}

pub fn write_csv<W: Write>(out: W, table: &Table, hash: &str) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(all_columns(table))?;
    for row in &table.rows {
        let mut rec: Vec<String> = row.cells.iter().map(Cell::csv).collect();
        rec.push(row.status());
        rec.push(hash.to_owned());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(
    mut out: W,
    table: &Table,
    config: &Value,
    provenance: &Value,
    hash: &str,
) -> std::io::Result<()> {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            let mut v: Vec<Value> = r.cells.iter().map(Cell::json).collect();
            v.push(json!(r.status()));
            v.push(json!(hash));
            Value::Array(v)
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("config".into(), config.clone());
    doc.insert("provenance".into(), provenance.clone());
    doc.insert("columns".into(), json!(all_columns(table)));
    doc.insert("rows".into(), Value::Array(rows));
    serde_json::to_writer_pretty(&mut out, &Value::Object(doc))?;
    out.write_all(b"\n")
}
