//! Columnar point tables.
//!
//! A [`PointTable`] holds the x/y coordinates of every point plus any number
//! of auxiliary columns. Columns are either 64-bit reals or categorical
//! (a code per row indexing into a sorted, deduplicated label list). Tables
//! are immutable once built; column storage is reference counted so the x/y
//! arrays are shared with their named columns.

use std::collections::HashMap;
use std::io::Read;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether a channel is driven by discrete labels or by numeric values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Categorical,
    Continuous,
}

impl ChannelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelKind::Categorical => "categorical",
            ChannelKind::Continuous => "continuous",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    codes: Arc<[u32]>,
    labels: Arc<[String]>,
}

impl Categorical {
    /// Labels must be unique and sorted; every code must index a label.
    pub fn new(codes: Vec<u32>, labels: Vec<String>) -> Result<Self> {
        if let Some(w) = labels.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Invariant(format!(
                "categorical labels must be strictly sorted, found `{}` before `{}`",
                w[0], w[1]
            )));
        }
        if let Some(&c) = codes.iter().find(|&&c| c as usize >= labels.len()) {
            return Err(Error::Invariant(format!(
                "category code {c} has no label ({} labels)",
                labels.len()
            )));
        }
        Ok(Categorical {
            codes: codes.into(),
            labels: labels.into(),
        })
    }

    /// Builds a categorical column from raw string values, assigning codes
    /// in sorted label order.
    pub fn from_values<S: AsRef<str>>(values: &[S]) -> Self {
        let mut seen: HashMap<&str, u32> = HashMap::new();
        let mut provisional = Vec::with_capacity(values.len());
        for v in values {
            let next = seen.len() as u32;
            provisional.push(*seen.entry(v.as_ref()).or_insert(next));
        }
        let mut labels: Vec<(&str, u32)> = seen.into_iter().collect();
        labels.sort_unstable();
        let mut remap = vec![0u32; labels.len()];
        for (sorted, &(_, first_seen)) in labels.iter().enumerate() {
            remap[first_seen as usize] = sorted as u32;
        }
        let codes: Vec<u32> = provisional.into_iter().map(|c| remap[c as usize]).collect();
        Categorical {
            codes: codes.into(),
            labels: labels.into_iter().map(|(l, _)| l.to_owned()).collect(),
        }
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label_of(&self, row: usize) -> &str {
        &self.labels[self.codes[row] as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Real(Arc<[f64]>),
    Categorical(Categorical),
}

impl Column {
    pub fn real(values: Vec<f64>) -> Self {
        Column::Real(values.into())
    }

    pub fn len(&self) -> usize {
        match self {
            Column::Real(v) => v.len(),
            Column::Categorical(c) => c.codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ChannelKind {
        match self {
            Column::Real(_) => ChannelKind::Continuous,
            Column::Categorical(_) => ChannelKind::Categorical,
        }
    }

    pub fn as_real(&self) -> Option<&[f64]> {
        match self {
            Column::Real(v) => Some(v),
            Column::Categorical(_) => None,
        }
    }

    pub fn as_categorical(&self) -> Option<&Categorical> {
        match self {
            Column::Real(_) => None,
            Column::Categorical(c) => Some(c),
        }
    }

    /// Statistics over the column's values. Categorical columns report the
    /// range of their codes. An empty column reports `min == max == 0`.
    pub fn stats(&self) -> ColumnStats {
        match self {
            Column::Real(values) => {
                if values.is_empty() {
                    return ColumnStats {
                        min: 0.0,
                        max: 0.0,
                        has_nonpositive: false,
                        min_positive: None,
                        unique_count: None,
                    };
                }
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                let mut min_positive: Option<f64> = None;
                for &v in values.iter() {
                    min = min.min(v);
                    max = max.max(v);
                    if v > 0.0 {
                        min_positive = Some(min_positive.map_or(v, |m| m.min(v)));
                    }
                }
                ColumnStats {
                    min,
                    max,
                    has_nonpositive: min <= 0.0,
                    min_positive,
                    unique_count: None,
                }
            }
            Column::Categorical(c) => {
                let (min, max) = c
                    .codes
                    .iter()
                    .fold(None, |acc: Option<(u32, u32)>, &code| match acc {
                        None => Some((code, code)),
                        Some((lo, hi)) => Some((lo.min(code), hi.max(code))),
                    })
                    .map_or((0.0, 0.0), |(lo, hi)| (lo as f64, hi as f64));
                ColumnStats {
                    min,
                    max,
                    has_nonpositive: !c.codes.is_empty() && min <= 0.0,
                    min_positive: c.codes.iter().any(|&v| v > 0).then_some(1.0),
                    unique_count: Some(c.label_count()),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub min: f64,
    pub max: f64,
    pub has_nonpositive: bool,
    /// Smallest strictly positive value, used as the default lower bound of
    /// a log domain.
    pub min_positive: Option<f64>,
    /// Label count; only set for categorical columns.
    pub unique_count: Option<usize>,
}

/// An immutable columnar dataset of 2D points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTable {
    row_count: usize,
    x_name: String,
    y_name: String,
    x: Arc<[f64]>,
    y: Arc<[f64]>,
    columns: Vec<(String, Column)>,
}

impl PointTable {
    /// Builds a table from named columns. The x/y columns must be real and
    /// finite; every column must have the same length.
    pub fn new(x_column: &str, y_column: &str, columns: Vec<(String, Column)>) -> Result<Self> {
        for (i, (name, _)) in columns.iter().enumerate() {
            if columns[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        let find = |name: &str| -> Result<Arc<[f64]>> {
            let (_, col) = columns
                .iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| Error::UnknownColumn(name.to_owned()))?;
            match col {
                Column::Real(v) => Ok(v.clone()),
                Column::Categorical(_) => Err(Error::KindMismatch {
                    column: name.to_owned(),
                    expected: "continuous",
                    actual: "categorical",
                }),
            }
        };
        let x = find(x_column)?;
        let y = find(y_column)?;
        let row_count = x.len();
        for (name, col) in &columns {
            if col.len() != row_count {
                return Err(Error::LengthMismatch {
                    column: name.clone(),
                    len: col.len(),
                    expected: row_count,
                });
            }
        }
        for (name, values) in [(x_column, &x), (y_column, &y)] {
            if let Some(row) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    row: row + 1,
                    column: name.to_owned(),
                    message: format!("non-finite coordinate {}", values[row]),
                });
            }
        }
        Ok(PointTable {
            row_count,
            x_name: x_column.to_owned(),
            y_name: y_column.to_owned(),
            x,
            y,
            columns,
        })
    }

    /// Convenience constructor for tables that only carry coordinates.
    pub fn from_xy(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        PointTable::new(
            "x",
            "y",
            vec![("x".into(), Column::real(x)), ("y".into(), Column::real(y))],
        )
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn is_empty(&self) -> bool {
        self.row_count == 0
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x_name(&self) -> &str {
        &self.x_name
    }

    pub fn y_name(&self) -> &str {
        &self.y_name
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &Column)> {
        self.columns.iter().map(|(n, c)| (n.as_str(), c))
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c)
            .ok_or_else(|| Error::UnknownColumn(name.to_owned()))
    }

    pub fn column_stats(&self, name: &str) -> Result<ColumnStats> {
        Ok(self.column(name)?.stats())
    }

    pub fn infer_channel_kind(&self, name: &str) -> Result<ChannelKind> {
        Ok(self.column(name)?.kind())
    }

    /// Equal-width histogram over `[min, max]`. Bin `i` covers
    /// `[min + i*w, min + (i+1)*w)`; the last bin is closed on the right and
    /// also absorbs every value when `min == max`.
    pub fn histogram(&self, name: &str, bin_count: usize) -> Result<Vec<u64>> {
        if bin_count == 0 {
            return Err(Error::Config("histogram needs at least one bin".into()));
        }
        let values = self.real_column(name)?;
        let mut counts = vec![0u64; bin_count];
        if values.is_empty() {
            return Ok(counts);
        }
        let stats = self.column(name)?.stats();
        for &v in values {
            counts[bin_index(v, stats.min, stats.max, bin_count)] += 1;
        }
        Ok(counts)
    }

    /// Per-label counts in sorted label order.
    pub fn category_frequencies(&self, name: &str) -> Result<Vec<(String, u64)>> {
        let cat = match self.column(name)? {
            Column::Categorical(c) => c,
            Column::Real(_) => {
                return Err(Error::KindMismatch {
                    column: name.to_owned(),
                    expected: "categorical",
                    actual: "continuous",
                })
            }
        };
        let mut counts = vec![0u64; cat.label_count()];
        for &c in cat.codes() {
            counts[c as usize] += 1;
        }
        Ok(cat.labels().iter().cloned().zip(counts).collect())
    }

    fn real_column(&self, name: &str) -> Result<&[f64]> {
        match self.column(name)? {
            Column::Real(v) => Ok(v),
            Column::Categorical(_) => Err(Error::KindMismatch {
                column: name.to_owned(),
                expected: "continuous",
                actual: "categorical",
            }),
        }
    }
}

/// Bin of `v` under the equal-width rule used by [`PointTable::histogram`].
pub fn bin_index(v: f64, min: f64, max: f64, bin_count: usize) -> usize {
    let last = bin_count - 1;
    let width = (max - min) / bin_count as f64;
    if !(width > 0.0) {
        return last;
    }
    let mut idx = ((v - min) / width).floor().clamp(0.0, last as f64) as usize;
    // Correct for rounding in the division so the result agrees with the
    // edge comparisons exactly.
    while idx > 0 && v < min + idx as f64 * width {
        idx -= 1;
    }
    while idx < last && v >= min + (idx + 1) as f64 * width {
        idx += 1;
    }
    idx
}

/// Options for [`ingest_csv_with`].
#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// Columns kept as categorical even when every value parses as a number.
    pub categorical: Vec<String>,
}

/// Reads a UTF-8 CSV with a header row into a [`PointTable`].
pub fn ingest_csv<R: Read>(source: R, x_column: &str, y_column: &str) -> Result<PointTable> {
    ingest_csv_with(source, x_column, y_column, &IngestOptions::default())
}

pub fn ingest_csv_with<R: Read>(
    source: R,
    x_column: &str,
    y_column: &str,
    options: &IngestOptions,
) -> Result<PointTable> {
    let raw = read_raw_columns(source)?;
    for name in [x_column, y_column] {
        if !raw.iter().any(|c| c.name == name) {
            return Err(Error::UnknownColumn(name.to_owned()));
        }
        if options.categorical.iter().any(|c| c == name) {
            return Err(Error::Config(format!(
                "coordinate column `{name}` cannot be categorical"
            )));
        }
    }
    let columns = raw
        .into_iter()
        .map(|col| {
            let is_coord = col.name == x_column || col.name == y_column;
            let forced = options.categorical.contains(&col.name);
            let column = col.finish(is_coord, forced)?;
            Ok((col.name, column))
        })
        .collect::<Result<Vec<_>>>()?;
    PointTable::new(x_column, y_column, columns)
}

/// Reads every column of a CSV without designating coordinates, inferring
/// each column's kind.
pub fn read_csv_columns<R: Read>(source: R) -> Result<Vec<(String, Column)>> {
    read_raw_columns(source)?
        .into_iter()
        .map(|col| {
            let column = col.finish(false, false)?;
            Ok((col.name, column))
        })
        .collect()
}

/// Field text for one column, stored contiguously until the column's kind is
/// decided.
struct RawColumn {
    name: String,
    bytes: String,
    ends: Vec<usize>,
}

impl RawColumn {
    fn field(&self, row: usize) -> &str {
        let start = if row == 0 { 0 } else { self.ends[row - 1] };
        &self.bytes[start..self.ends[row]]
    }

    fn rows(&self) -> impl Iterator<Item = &str> {
        (0..self.ends.len()).map(|r| self.field(r))
    }

    fn finish(&self, numeric_required: bool, categorical: bool) -> Result<Column> {
        if let Some(row) = self.rows().position(str::is_empty) {
            return Err(self.parse_error(row, "missing value".into()));
        }
        if !categorical {
            let parsed: Vec<Option<f64>> = self
                .rows()
                .map(|f| f.trim().parse::<f64>().ok())
                .collect();
            let all_numeric = parsed.iter().all(Option::is_some);
            if all_numeric || numeric_required {
                let mut values = Vec::with_capacity(parsed.len());
                for (row, v) in parsed.into_iter().enumerate() {
                    match v {
                        Some(v) if v.is_finite() => values.push(v),
                        Some(v) => {
                            return Err(self.parse_error(row, format!("non-finite value {v}")))
                        }
                        None => {
                            return Err(self.parse_error(
                                row,
                                format!("non-numeric token `{}`", self.field(row)),
                            ))
                        }
                    }
                }
                return Ok(Column::real(values));
            }
        }
        let values: Vec<&str> = self.rows().collect();
        Ok(Column::Categorical(Categorical::from_values(&values)))
    }

    fn parse_error(&self, row: usize, message: String) -> Error {
        Error::Parse {
            row: row + 1,
            column: self.name.clone(),
            message,
        }
    }
}

fn read_raw_columns<R: Read>(source: R) -> Result<Vec<RawColumn>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(source);
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut columns: Vec<RawColumn> = Vec::with_capacity(headers.len());
    for name in headers.iter() {
        if columns.iter().any(|c| c.name == name) {
            return Err(Error::DuplicateColumn(name.to_owned()));
        }
        columns.push(RawColumn {
            name: name.to_owned(),
            bytes: String::new(),
            ends: Vec::new(),
        });
    }
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(true) => {
                for (col, field) in columns.iter_mut().zip(record.iter()) {
                    col.bytes.push_str(field);
                    col.ends.push(col.bytes.len());
                }
            }
            Ok(false) => break,
            Err(e) => return Err(csv_error(e)),
        }
    }
    Ok(columns)
}

fn csv_error(e: csv::Error) -> Error {
    let row = e
        .position()
        .map(|p| (p.record() as usize).max(1))
        .unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => Error::Parse {
            row,
            column: String::new(),
            message: format!("expected {expected_len} fields, found {len}"),
        },
        csv::ErrorKind::Utf8 { err, .. } => Error::Parse {
            row,
            column: String::new(),
            message: format!("invalid UTF-8: {err}"),
        },
        other => Error::Parse {
            row,
            column: String::new(),
            message: format!("{other:?}"),
        },
    }
}
