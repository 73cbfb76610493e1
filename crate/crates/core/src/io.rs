//! Text formats: grid specifications, parameter lists, point tables and
//! float formatting for CSV output.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{parse_expression, Params};
use crate::flows::canonical_param;

pub const MAX_GRID_POINTS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    /// Node `i`, hitting both endpoints exactly.
    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            return self.max;
        }
        self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
    }
}

/// Tensor-product grid, row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn names(&self) -> Vec<&str> {
        self.axes.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        let mut rest = index;
        let mut out = vec![0.0; self.axes.len()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            out[k] = a.value(rest % a.count);
            rest /= a.count;
        }
        out
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, a) in self.axes.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}={}:{}:{}", a.name, format_float(a.min), format_float(a.max), a.count)?;
        }
        Ok(())
    }
}

fn parse_error(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse { offset, message: message.into() }
}

/// Numeric literal or constant expression such as `-pi/2`.
pub fn parse_constant(text: &str, offset: usize) -> Result<f64> {
    let e = parse_expression(text).map_err(|err| match err {
        Error::Parse { offset: o, message } => parse_error(offset + o, message),
        Error::UnknownIdentifier { name, offset: o } => Error::UnknownIdentifier { name, offset: offset + o },
        other => other,
    })?;
    if !e.variables().is_empty() || !e.parameters().is_empty() {
        return Err(parse_error(offset, "expected a constant"));
    }
    let v = e.eval_f64(&[], 0.0, &Params::new())?;
    if !v.is_finite() {
        return Err(parse_error(offset, "value is not finite"));
    }
    Ok(v)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '\'' || c == '₃')
}

/// Comma-separated items with the byte offset of each.
fn items(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut offset = 0;
    text.split(',').map(move |item| {
        let at = offset;
        offset += item.len() + 1;
        (at, item)
    })
}

/// `name=key` split with both sides trimmed; returns the value offset.
fn key_value(item: &str, at: usize) -> Result<(&str, &str, usize)> {
    let eq = item.find('=').ok_or_else(|| parse_error(at, "expected `name=value`"))?;
    let name = item[..eq].trim();
    if !is_identifier(name) {
        return Err(parse_error(at, format!("invalid name `{name}`")));
    }
    Ok((name, &item[eq + 1..], at + eq + 1))
}

/// Parses `x=a:b:n,y=a:b:n`.
pub fn parse_grid(text: &str) -> Result<GridSpec> {
    if text.trim().is_empty() {
        return Err(parse_error(0, "empty grid"));
    }
    let mut axes: Vec<Axis> = Vec::new();
    let mut total: usize = 1;
    for (at, item) in items(text) {
        let (name, spec, vat) = key_value(item, at)?;
        if axes.iter().any(|a| a.name == name) {
            return Err(parse_error(at, format!("axis `{name}` given twice")));
        }
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(parse_error(vat, "expected `min:max:count`"));
        }
        let min = parse_constant(parts[0], vat)?;
        let max = parse_constant(parts[1], vat + parts[0].len() + 1)?;
        let count: usize = parts[2].trim().parse().map_err(|_| parse_error(vat, "count must be an integer"))?;
        if count < 2 {
            return Err(parse_error(vat, "count must be at least 2"));
        }
        if max <= min {
            return Err(parse_error(vat, "max must exceed min"));
        }
        total = total
            .checked_mul(count)
            .filter(|&n| n <= MAX_GRID_POINTS)
            .ok_or_else(|| parse_error(vat, format!("grid exceeds {MAX_GRID_POINTS} points")))?;
        axes.push(Axis { name: name.to_string(), min, max, count });
    }
    Ok(GridSpec { axes })
}

/// Parses `k=v,...`; names are mapped to their canonical spelling.
pub fn parse_params(text: &str) -> Result<Params> {
    let mut out = Params::new();
    if text.trim().is_empty() {
        return Ok(out);
    }
    for (at, item) in items(text) {
        let (name, value, vat) = key_value(item, at)?;
        let key = canonical_param(name);
        if out.contains_key(&key) {
            return Err(parse_error(at, format!("parameter `{name}` given twice")));
        }
        out.insert(key, parse_constant(value, vat)?);
    }
    Ok(out)
}

/// Numeric table read from CSV. A first row with any non-numeric cell is
/// taken as the header; otherwise columns are named `c0, c1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl PointTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

pub fn parse_points_csv(text: &str) -> Result<PointTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| {
            let offset = e.position().map(|p| p.byte() as usize).unwrap_or(0);
            parse_error(offset, e.to_string())
        })?;
        let offset = rec.position().map(|p| p.byte() as usize).unwrap_or(0);
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        let values: Option<Vec<f64>> = rec.iter().map(|c| c.parse::<f64>().ok().filter(|v| v.is_finite())).collect();
        match (values, &columns) {
            (Some(v), Some(cols)) => {
                if v.len() != cols.len() {
                    return Err(parse_error(offset, format!("expected {} columns, got {}", cols.len(), v.len())));
                }
                rows.push(v);
            }
            (Some(v), None) => {
                columns = Some((0..v.len()).map(|k| format!("c{k}")).collect());
                rows.push(v);
            }
            (None, None) if line == 0 => {
                let names: Vec<String> = rec.iter().map(str::to_string).collect();
                for (k, n) in names.iter().enumerate() {
                    if n.is_empty() || names[..k].contains(n) {
                        return Err(parse_error(offset, format!("bad column name `{n}`")));
                    }
                }
                columns = Some(names);
            }
            (None, _) => return Err(parse_error(offset, format!("non-numeric value on record {}", line + 1))),
        }
    }
    let columns = columns.ok_or_else(|| parse_error(0, "no records"))?;
    Ok(PointTable { columns, rows })
}

/// Shortest round-trip decimal; `nan`, `inf`, `-inf` for non-finite values.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}
