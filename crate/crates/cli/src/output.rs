//! Tables, sidecars and atomic file writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use nonmarkov::io::fmt_float;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, Settings};
use crate::error::CliError;

pub const VERSION: &str = concat!("nonmarkov v", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(usize),
    Float(f64),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            Self::Float(v) => fmt_float(*v),
            Self::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Self::Int(v) => json!(v),
            Self::Float(v) => json!(round12(*v)),
            Self::Missing => Value::Null,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Free-form notes copied into the metadata.
    pub notes: Vec<String>,
}

/// `v` rounded to twelve significant digits.
pub fn round12(v: f64) -> f64 {
    fmt_float(v).parse().expect("formatted float parses")
}

/// Rounds every float inside a JSON value to twelve significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => json!(round12(n.as_f64().unwrap())),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn metadata(s: &Settings, notes: &[String]) -> Value {
    json!({
        "version": VERSION,
        "experiment": s.experiment.name(),
        "config_hash": s.hash(),
        "config": s.echo(),
        "notes": notes,
    })
}

/// Writes `contents` to `dir/name` through a temporary file in the same
/// directory.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::input(dir, e))?;
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::input(dir, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| CliError::input(&path, e))?;
    tmp.persist(&path).map_err(|e| CliError::input(&path, e.error))?;
    Ok(path)
}

/// Emits a table as CSV plus a `.meta.json` sidecar, or as a single JSON
/// document carrying the same metadata.
pub fn write_table(s: &Settings, t: &Table) -> Result<Vec<PathBuf>, CliError> {
    let meta = metadata(s, &t.notes);
    match s.format {
        Format::Csv => {
            let mut text = t.columns.join(",");
            text.push('\n');
            for row in &t.rows {
                text.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
                text.push('\n');
            }
            let csv = write_atomic(&s.out, &format!("{}.csv", t.name), &text)?;
            let side = write_atomic(&s.out, &format!("{}.meta.json", t.name), &pretty(&meta))?;
            Ok(vec![csv, side])
        }
        Format::Json => {
            let rows: Vec<Value> = t.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
            let doc = json!({ "metadata": meta, "columns": t.columns, "rows": rows });
            Ok(vec![write_atomic(&s.out, &format!("{}.json", t.name), &pretty(&doc))?])
        }
    }
}

/// A JSON report with floats rounded and the metadata attached.
pub fn write_report<T: Serialize>(s: &Settings, name: &str, body: &T) -> Result<PathBuf, CliError> {
    let doc = json!({ "metadata": metadata(s, &[]), "report": round_json(serde_json::to_value(body).expect("serializable")) });
    write_atomic(&s.out, &format!("{name}.json"), &pretty(&doc))
}

/// A data container written verbatim at full precision.
pub fn write_data<T: Serialize>(s: &Settings, name: &str, body: &T) -> Result<PathBuf, CliError> {
    write_atomic(&s.out, &format!("{name}.json"), &nonmarkov::io::to_json(body))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// File-name tag for a rate, e.g. `G0.5`.
pub fn tag(prefix: &str, v: f64) -> String {
    format!("{prefix}{v}")
}
