//! Tabular output (CSV with `%.17g` floats, JSON mirror) and given-data CSV input.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Format a float like C's `printf("%.17g", v)`.
pub fn fmt_g17(v: f64) -> String {
    const PREC: i32 = 17;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    // Round to 17 significant digits first; the exponent of the rounded value decides the style.
    let sci = format!("{:.*e}", (PREC - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PREC).contains(&exp) {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PREC - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(v) => fmt_g17(*v),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Cell::Int(i) => serde_json::Value::from(*i),
            // Non-finite numbers have no JSON literal; emit them as strings.
            Cell::Num(v) if v.is_finite() => serde_json::Value::from(*v),
            Cell::Num(v) => serde_json::Value::from(fmt_g17(*v)),
            Cell::Text(s) => serde_json::Value::from(s.clone()),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map(Cell::Num).unwrap_or(Cell::Empty)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
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

/// Header plus rows; every result type can be rendered as one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn append(&mut self, other: Table) {
        debug_assert_eq!(self.header, other.header);
        self.rows.extend(other.rows);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::to_csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// JSON mirror: an array of objects keyed by the header.
    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: serde_json::Map<String, serde_json::Value> =
                    self.header.iter().cloned().zip(r.iter().map(Cell::to_json)).collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&rows).expect("table serializes");
        s.push('\n');
        s
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }
}

/// Write `contents` to `path` through a temporary file and rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp.{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Given-data table read from CSV: header row, last column is the response.
#[derive(Debug, Clone, PartialEq)]
pub struct GivenData {
    pub names: Vec<String>,
    pub x: Array2<f64>,
    pub y: Vec<f64>,
}

pub fn read_given_data(path: &Path) -> Result<GivenData> {
    let text = fs::read_to_string(path)?;
    parse_given_data(&text)
}

pub fn parse_given_data(text: &str) -> Result<GivenData> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 {
        return Err(Error::config("given-data CSV needs at least one input column and a response column"));
    }
    let p = header.len() - 1;
    let mut flat = Vec::new();
    let mut y = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != p + 1 {
            return Err(Error::config(format!("row {line}: expected {} columns, found {}", p + 1, rec.len())));
        }
        for (k, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::config(format!("row {line}, column {k}: `{field}` is not a number")))?;
            if k < p {
                flat.push(v);
            } else {
                y.push(v);
            }
        }
    }
    let n = y.len();
    if n < 2 {
        return Err(Error::config("given-data CSV needs at least two rows"));
    }
    let x = Array2::from_shape_vec((n, p), flat).expect("row-major shape");
    Ok(GivenData { names: header[..p].to_vec(), x, y })
}
