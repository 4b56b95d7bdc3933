//! CSV blocks preceded by a one-line JSON header.

use serde::{Deserialize, Serialize};
use std::io::{self, Write};

/// One row of a pass/fail table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

impl CheckRow {
    /// `value <= bound`.
    pub fn new(check: impl Into<String>, value: f64, bound: f64) -> Self {
        CheckRow {
            check: check.into(),
            value,
            bound,
            holds: value <= bound,
        }
    }

    /// `value >= bound`.
    pub fn at_least(check: impl Into<String>, value: f64, bound: f64) -> Self {
        CheckRow {
            check: check.into(),
            value,
            bound,
            holds: value >= bound,
        }
    }

    pub fn flag(check: impl Into<String>, holds: bool) -> Self {
        CheckRow {
            check: check.into(),
            value: if holds { 1.0 } else { 0.0 },
            bound: 1.0,
            holds,
        }
    }

    pub fn info(check: impl Into<String>, value: f64) -> Self {
        CheckRow {
            check: check.into(),
            value,
            bound: f64::NAN,
            holds: true,
        }
    }
}

/// Header written as the first line of every output file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputHeader {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub constants: serde_json::Value,
    pub meta: serde_json::Value,
}

impl OutputHeader {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        OutputHeader {
            tool: "viana-lab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config_hash.into(),
            seed,
            constants: serde_json::Value::Null,
            meta: serde_json::Value::Object(Default::default()),
        }
    }

    pub fn with_constants<T: Serialize>(mut self, c: &T) -> Self {
        self.constants = serde_json::to_value(c).unwrap_or(serde_json::Value::Null);
        self
    }

    pub fn with_meta(mut self, key: &str, value: impl Serialize) -> Self {
        if let serde_json::Value::Object(m) = &mut self.meta {
            m.insert(key.into(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Seventeen significant digits.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn fmt_cell(c: &Cell) -> String {
    match c {
        Cell::Int(i) => i.to_string(),
        Cell::Float(f) => fmt_float(*f),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) => {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.clone()
            }
        }
    }
}

/// Tabular output with its header.
#[derive(Clone, Debug)]
pub struct CsvBlock {
    pub header: OutputHeader,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvBlock {
    pub fn new(header: OutputHeader, columns: &[&str]) -> Self {
        CsvBlock {
            header,
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let json = serde_json::to_string(&self.header).map_err(io::Error::other)?;
        writeln!(w, "{json}")?;
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(fmt_cell).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write_to(&mut v).expect("writing to a vector");
        v
    }

    /// Table of check rows.
    pub fn from_checks(header: OutputHeader, checks: &[CheckRow]) -> Self {
        let mut b = CsvBlock::new(header, &["check", "value", "bound", "holds"]);
        for c in checks {
            b.push(vec![c.check.clone().into(), c.value.into(), c.bound.into(), c.holds.into()]);
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_with_17_digits() {
        for v in [0.1, 1.0 / 3.0, std::f64::consts::PI * 1e-300, -2.5e17, 5e-324] {
            let s = fmt_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn block_starts_with_json_header() {
        let h = OutputHeader::new("abc", 7).with_meta("kind", "test");
        let mut b = CsvBlock::new(h, &["a", "b"]);
        b.push(vec![1i64.into(), 0.5.into()]);
        let text = String::from_utf8(b.to_bytes()).unwrap();
        let first = text.lines().next().unwrap();
        let v: serde_json::Value = serde_json::from_str(first).unwrap();
        assert_eq!(v["seed"], 7);
        assert_eq!(v["config_hash"], "abc");
        assert_eq!(text.lines().nth(1).unwrap(), "a,b");
        assert_eq!(text.lines().nth(2).unwrap(), "1,5.0000000000000000e-1");
    }
}
