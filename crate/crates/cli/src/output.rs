//! Artifact writing: tables as CSV or JSON-lines, each with a metadata sidecar.
//!
//! CSV files start with one `# key=value ...` comment line naming the system and
//! the run parameters, then a header row. Reals use 17 significant digits;
//! non-finite values are written `inf`, `-inf` and `nan`. JSON-lines files
//! hold one object per row and write non-finite reals as those same strings.
//!
//! Every artifact `x` gets `x.meta.json` (schema below). Nothing in either
//! file depends on the clock or the host, so reruns are byte-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{Format, Params};
use crate::error::{CliError, CliResult};

/// Bumped whenever a table layout or the sidecar schema changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Real)
    }
}

fn real_text(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Real(x) => real_text(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Real(x) if x.is_finite() => Value::from(*x),
            Cell::Real(x) => Value::from(real_text(*x)),
            Cell::Int(i) => Value::from(*i),
            Cell::Bool(b) => Value::from(*b),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Missing => Value::Null,
        }
    }
}

/// A named table; the file stem is `name`.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Run facts echoed in the CSV comment line and the sidecar.
    pub facts: Vec<(&'static str, Cell)>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.to_vec(),
            rows: Vec::new(),
            facts: Vec::new(),
        }
    }

    pub fn fact(mut self, key: &'static str, value: impl Into<Cell>) -> Self {
        self.facts.push((key, value.into()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width of {}", self.name);
        self.rows.push(row);
    }

    fn render(&self, format: Format, spec_name: &str) -> String {
        let mut out = String::new();
        match format {
            Format::Csv => {
                out.push_str(&format!("# spec={spec_name}"));
                for (k, v) in &self.facts {
                    out.push_str(&format!(" {k}={}", v.csv()));
                }
                out.push('\n');
                out.push_str(&self.columns.join(","));
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
            }
            Format::JsonLines => {
                for row in &self.rows {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), v.json()))
                        .collect();
                    out.push_str(&Value::Object(obj).to_string());
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Sidecar schema, one per artifact.
#[derive(Debug, Serialize)]
struct Sidecar<'a> {
    schema: u32,
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    artifact: &'a str,
    format: &'a str,
    columns: &'a [&'static str],
    rows: usize,
    artifact_sha256: String,
    spec_name: &'a str,
    spec_sha256: &'a str,
    params: &'a Params,
    facts: Map<String, Value>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes tables and raw files into one output directory.
pub struct Writer<'a> {
    pub dir: PathBuf,
    pub format: Format,
    pub command: &'a str,
    pub spec_name: String,
    pub spec_sha256: String,
    pub params: &'a Params,
    pub written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    pub fn new(
        dir: &Path,
        format: Format,
        command: &'a str,
        spec_name: &str,
        spec_toml: &str,
        params: &'a Params,
    ) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            command,
            spec_name: spec_name.to_string(),
            spec_sha256: sha256_hex(spec_toml.as_bytes()),
            params,
            written: Vec::new(),
        })
    }

    fn extension(&self) -> &'static str {
        match self.format {
            Format::Csv => "csv",
            Format::JsonLines => "jsonl",
        }
    }

    pub fn table(&mut self, table: &Table) -> CliResult<PathBuf> {
        let file = format!("{}.{}", table.name, self.extension());
        let body = table.render(self.format, &self.spec_name);
        let facts = table.facts.iter().map(|(k, v)| (k.to_string(), v.json())).collect();
        self.emit(&file, &body, &table.columns, table.rows.len(), facts)
    }

    /// A non-tabular artifact (TOML, JSON) with its sidecar.
    pub fn raw(&mut self, file: &str, body: &str) -> CliResult<PathBuf> {
        self.emit(file, body, &[], 0, Map::new())
    }

    fn emit(
        &mut self,
        file: &str,
        body: &str,
        columns: &[&'static str],
        rows: usize,
        facts: Map<String, Value>,
    ) -> CliResult<PathBuf> {
        let path = self.dir.join(file);
        write_file(&path, body.as_bytes())?;
        let format = match Path::new(file).extension().and_then(|e| e.to_str()) {
            Some("csv") => "csv",
            Some("jsonl") => "json-lines",
            Some("toml") => "toml",
            _ => "json",
        };
        let meta = Sidecar {
            schema: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            artifact: file,
            format,
            columns,
            rows,
            artifact_sha256: sha256_hex(body.as_bytes()),
            spec_name: &self.spec_name,
            spec_sha256: &self.spec_sha256,
            params: self.params,
            facts,
        };
        let mut text = serde_json::to_string_pretty(&meta).expect("sidecar serializes");
        text.push('\n');
        write_file(&self.dir.join(format!("{file}.meta.json")), text.as_bytes())?;
        self.written.push(path.clone());
        Ok(path)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new("x", &["a", "b", "c"]).fact("k_max", 10usize);
        t.push(vec![Cell::Real(0.5), Cell::Real(f64::NEG_INFINITY), Cell::Missing]);
        let s = t.render(Format::Csv, "demo");
        assert_eq!(s, "# spec=demo k_max=10\na,b,c\n5.0000000000000000e-1,-inf,\n");
    }

    #[test]
    fn json_lines_layout() {
        let mut t = Table::new("x", &["a", "b"]);
        t.push(vec![Cell::Real(0.25), Cell::Real(f64::INFINITY)]);
        assert_eq!(t.render(Format::JsonLines, "demo"), "{\"a\":0.25,\"b\":\"inf\"}\n");
    }

    #[test]
    fn seventeen_digits_round_trip() {
        let x = std::f64::consts::LN_2 / std::f64::consts::LN_10;
        assert_eq!(real_text(x).parse::<f64>().unwrap(), x);
    }
}
