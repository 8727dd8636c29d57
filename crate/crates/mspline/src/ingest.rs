//! Reading a two-column dataset from delimited text.

use std::path::PathBuf;

use mspline_core::DesignData;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

/// A column chosen by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl ColumnRef {
    /// Digits select by position, anything else by name.
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_string()),
        }
    }

    fn resolve(&self, header: Option<&csv::StringRecord>) -> AppResult<usize> {
        match self {
            ColumnRef::Index(i) => Ok(*i),
            ColumnRef::Name(name) => header
                .and_then(|h| h.iter().position(|c| c.trim() == name))
                .ok_or_else(|| match header {
                    Some(_) => AppError::Data(format!("column '{name}' not found in header")),
                    None => AppError::Usage(format!("column '{name}' given by name but the file has no header")),
                }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub x_column: ColumnRef,
    pub y_column: ColumnRef,
    pub delimiter: char,
    pub decimal_mark: char,
    /// Rows holding this value in either column are dropped.
    pub missing_sentinel: Option<f64>,
    pub header: bool,
}

impl DatasetSpec {
    pub fn new(path: impl Into<PathBuf>, x_column: ColumnRef, y_column: ColumnRef) -> Self {
        Self {
            path: path.into(),
            x_column,
            y_column,
            delimiter: ',',
            decimal_mark: '.',
            missing_sentinel: None,
            header: true,
        }
    }

    pub fn validate(&self) -> AppResult<()> {
        if self.x_column == self.y_column {
            return Err(AppError::Usage("x and y columns must differ".into()));
        }
        if !self.delimiter.is_ascii() {
            return Err(AppError::Usage("delimiter must be a single ASCII character".into()));
        }
        if self.decimal_mark == self.delimiter {
            return Err(AppError::Usage("decimal mark and delimiter must differ".into()));
        }
        Ok(())
    }
}

/// Affine map `t = (x - x_min) / (x_max - x_min)` from data units to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub x_min: f64,
    pub x_max: f64,
}

impl AffineMap {
    pub fn to_unit(&self, x: f64) -> f64 {
        (x - self.x_min) / (self.x_max - self.x_min)
    }

    pub fn from_unit(&self, t: f64) -> f64 {
        self.x_min + t * (self.x_max - self.x_min)
    }

    /// `dt/dx`, the factor applied once per derivative order when reporting
    /// derivatives in data units.
    pub fn slope(&self) -> f64 {
        1.0 / (self.x_max - self.x_min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub data: DesignData,
    pub map: AffineMap,
    /// Distinct x values in data units, ascending.
    pub x: Vec<f64>,
    pub rows_read: usize,
    pub rows_missing: usize,
    /// Number of x values that occurred more than once.
    pub duplicate_groups: usize,
    pub warnings: Vec<String>,
}

fn parse_number(field: &str, decimal_mark: char) -> Option<f64> {
    let s = field.trim();
    if s.is_empty() {
        return None;
    }
    let owned;
    let s = if decimal_mark == '.' {
        s
    } else {
        owned = s.replace(decimal_mark, ".");
        &owned
    };
    s.parse::<f64>().ok()
}

/// Parses, drops missing rows, sorts by x, averages y over repeated x and
/// rescales x to `[0, 1]`.
pub fn ingest(spec: &DatasetSpec) -> AppResult<Ingested> {
    spec.validate()?;
    let bytes = std::fs::read(&spec.path).map_err(|e| AppError::io(&spec.path, e))?;
    ingest_bytes(spec, &bytes)
}

/// [`ingest`] on in-memory file contents.
pub fn ingest_bytes(spec: &DatasetSpec, bytes: &[u8]) -> AppResult<Ingested> {
    spec.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter as u8)
        .has_headers(spec.header)
        .flexible(true)
        .from_reader(bytes);
    let header = if spec.header {
        Some(reader.headers().map_err(|e| AppError::Data(format!("cannot read header: {e}")))?.clone())
    } else {
        None
    };
    let xi = spec.x_column.resolve(header.as_ref())?;
    let yi = spec.y_column.resolve(header.as_ref())?;

    let mut pairs = Vec::new();
    let mut rows_read = 0;
    let mut rows_missing = 0;
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| AppError::Data(format!("record {}: {e}", k + 1)))?;
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        rows_read += 1;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| -> AppResult<Option<f64>> {
            let raw = rec
                .get(i)
                .ok_or_else(|| AppError::Data(format!("line {line}: no column {i}")))?;
            if raw.trim().is_empty() {
                return Ok(None);
            }
            parse_number(raw, spec.decimal_mark)
                .map(Some)
                .ok_or_else(|| AppError::Data(format!("line {line}: cannot parse '{raw}' as a number")))
        };
        let (x, y) = (field(xi)?, field(yi)?);
        let is_missing = |v: Option<f64>| match (v, spec.missing_sentinel) {
            (None, _) => true,
            (Some(v), Some(s)) => v == s,
            (Some(v), None) => !v.is_finite(),
        };
        if is_missing(x) || is_missing(y) {
            rows_missing += 1;
            continue;
        }
        pairs.push((x.unwrap(), y.unwrap()));
    }
    if pairs.is_empty() {
        return Err(AppError::Data(format!(
            "{}: no valid rows ({rows_read} read, {rows_missing} missing)",
            spec.path.display()
        )));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut x = Vec::with_capacity(pairs.len());
    let mut y = Vec::with_capacity(pairs.len());
    let mut duplicate_groups = 0;
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i + 1;
        while j < pairs.len() && pairs[j].0 == pairs[i].0 {
            j += 1;
        }
        if j - i > 1 {
            duplicate_groups += 1;
        }
        x.push(pairs[i].0);
        y.push(pairs[i..j].iter().map(|p| p.1).sum::<f64>() / (j - i) as f64);
        i = j;
    }
    let mut warnings = Vec::new();
    if duplicate_groups > 0 {
        warnings.push(format!(
            "{duplicate_groups} repeated x value(s): responses were averaged into single points"
        ));
    }
    if rows_missing > 0 {
        warnings.push(format!("{rows_missing} row(s) dropped as missing"));
    }
    let map = AffineMap {
        x_min: x[0],
        x_max: *x.last().unwrap(),
    };
    if !(map.x_max > map.x_min) {
        return Err(AppError::Data("x is constant: cannot rescale to [0, 1]".into()));
    }
    let mut t: Vec<f64> = x.iter().map(|&v| map.to_unit(v)).collect();
    // Pin the ends against rounding.
    t[0] = 0.0;
    *t.last_mut().unwrap() = 1.0;
    let data = DesignData::new(t, y)?;
    Ok(Ingested {
        data,
        map,
        x,
        rows_read,
        rows_missing,
        duplicate_groups,
        warnings,
    })
}
