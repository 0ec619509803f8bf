//! Ingestion and binarization of raw tabular data.
//!
//! Raw columns are declared (or inferred) as binary, categorical, or
//! continuous. [`binarize`] converts them into a pure 0/1 feature matrix:
//! binary columns become an identity/complement pair, categorical columns
//! become one-hot indicator groups, and continuous columns become paired
//! threshold indicators `x > t` / `x <= t` with thresholds picked from
//! quantiles (or a uniform partition) of the training distribution. The
//! [`FeatureMap`] records every kept indicator so unseen raw rows can be
//! mapped into the same feature space later.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A single raw cell value.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Missing,
}

impl Cell {
    /// Parses a CSV field: empty and `?` mean missing, numeric text becomes
    /// `Num`, anything else stays `Text`.
    pub fn parse(field: &str) -> Cell {
        let t = field.trim();
        if t.is_empty() || t == "?" {
            return Cell::Missing;
        }
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Cell::Num(v),
            _ => Cell::Text(t.to_string()),
        }
    }

    fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    /// Canonical text used to match categorical values (so `2` and `2.0`
    /// compare equal when a numeric column is treated as categorical).
    fn category_label(&self) -> Option<String> {
        match self {
            Cell::Num(v) => Some(format!("{v}")),
            Cell::Text(s) => Some(s.clone()),
            Cell::Missing => None,
        }
    }
}

/// Declared or inferred interpretation of a raw column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Binary,
    Categorical,
    Continuous,
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnKind::Binary => write!(f, "binary"),
            ColumnKind::Categorical => write!(f, "categorical"),
            ColumnKind::Continuous => write!(f, "continuous"),
        }
    }
}

/// One raw column: a name, its kind, and `n` cells.
#[derive(Debug, Clone)]
pub struct RawColumn {
    pub name: String,
    pub kind: ColumnKind,
    pub values: Vec<Cell>,
}

/// Raw training table: columns plus binary labels, all of the same length.
#[derive(Debug, Clone)]
pub struct RawTable {
    columns: Vec<RawColumn>,
    labels: Vec<bool>,
}

impl RawTable {
    pub fn new(columns: Vec<RawColumn>, labels: Vec<bool>) -> Result<Self, DatasetError> {
        if labels.is_empty() {
            return Err(DatasetError::EmptyTable);
        }
        for col in &columns {
            if col.values.len() != labels.len() {
                return Err(DatasetError::RaggedColumn {
                    column: col.name.clone(),
                    expected: labels.len(),
                    got: col.values.len(),
                });
            }
        }
        Ok(RawTable { columns, labels })
    }

    pub fn columns(&self) -> &[RawColumn] {
        &self.columns
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn num_rows(&self) -> usize {
        self.labels.len()
    }

    /// The cells of row `i`, in column order.
    pub fn row(&self, i: usize) -> Vec<Cell> {
        self.columns.iter().map(|c| c.values[i].clone()).collect()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }
}

/// How one binary feature was derived from a raw column.
#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    /// The raw 0/1 value itself.
    Identity,
    /// One minus the raw 0/1 value.
    Complement,
    /// Indicator of one categorical value.
    OneHot { category: String },
    /// Indicator `x > threshold`.
    Gt { threshold: f64 },
    /// Indicator `x <= threshold`.
    Le { threshold: f64 },
}

/// One entry of a [`FeatureMap`]: the source column plus the transform.
#[derive(Debug, Clone, PartialEq)]
pub struct BinFeature {
    pub source: String,
    pub transform: Transform,
}

impl BinFeature {
    /// Human-readable name of the binary feature, used in rule rendering and
    /// WCNF comments.
    pub fn display_name(&self) -> String {
        match &self.transform {
            Transform::Identity => self.source.clone(),
            Transform::Complement => format!("not {}", self.source),
            Transform::OneHot { category } => format!("{} = {}", self.source, category),
            Transform::Gt { threshold } => {
                format!("{} > {}", self.source, fmt_threshold(*threshold))
            }
            Transform::Le { threshold } => {
                format!("{} <= {}", self.source, fmt_threshold(*threshold))
            }
        }
    }

    /// Name of the negated feature, used when rendering DNF terms.
    pub fn negated_name(&self) -> String {
        match &self.transform {
            Transform::Identity => format!("not {}", self.source),
            Transform::Complement => self.source.clone(),
            Transform::OneHot { category } => format!("{} != {}", self.source, category),
            Transform::Gt { threshold } => {
                format!("{} <= {}", self.source, fmt_threshold(*threshold))
            }
            Transform::Le { threshold } => {
                format!("{} > {}", self.source, fmt_threshold(*threshold))
            }
        }
    }

    fn evaluate(&self, cell: &Cell, column: &str, row: usize) -> Result<bool, DatasetError> {
        match (&self.transform, cell) {
            (_, Cell::Missing) => Err(DatasetError::MissingValues {
                detail: format!("column '{column}', row {}", row + 1),
            }),
            (Transform::Identity, c) | (Transform::Complement, c) => {
                let v = as_binary(c).ok_or_else(|| DatasetError::NotBinaryValue {
                    column: column.to_string(),
                    row,
                    value: cell_text(c),
                })?;
                Ok(if matches!(self.transform, Transform::Identity) {
                    v
                } else {
                    !v
                })
            }
            (Transform::OneHot { category }, c) => {
                Ok(c.category_label().as_deref() == Some(category.as_str()))
            }
            (Transform::Gt { threshold }, Cell::Num(v)) => Ok(*v > *threshold),
            (Transform::Le { threshold }, Cell::Num(v)) => Ok(*v <= *threshold),
            (Transform::Gt { .. }, Cell::Text(s)) | (Transform::Le { .. }, Cell::Text(s)) => {
                Err(DatasetError::NonNumeric {
                    column: column.to_string(),
                    row,
                    value: s.clone(),
                })
            }
        }
    }
}

/// Formats a threshold the way rules are presented: whole numbers keep one
/// decimal (`5.0`), everything else prints minimally (`6.3`).
pub(crate) fn fmt_threshold(t: f64) -> String {
    if t.fract() == 0.0 && t.abs() < 1e15 {
        format!("{t:.1}")
    } else {
        format!("{t}")
    }
}

fn as_binary(c: &Cell) -> Option<bool> {
    match c {
        Cell::Num(v) if *v == 0.0 => Some(false),
        Cell::Num(v) if *v == 1.0 => Some(true),
        _ => None,
    }
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Num(v) => format!("{v}"),
        Cell::Text(s) => s.clone(),
        Cell::Missing => "<missing>".to_string(),
    }
}

/// Reversible record of how raw columns became binary features.
///
/// Entry order defines the column order of the binarized matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMap {
    entries: Vec<BinFeature>,
}

impl FeatureMap {
    pub fn from_entries(entries: Vec<BinFeature>) -> FeatureMap {
        FeatureMap { entries }
    }

    pub fn entries(&self) -> &[BinFeature] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.display_name()).collect()
    }

    /// A map that passes already-binary columns through unchanged.
    pub fn identity(column_names: &[String]) -> FeatureMap {
        FeatureMap {
            entries: column_names
                .iter()
                .map(|name| BinFeature {
                    source: name.clone(),
                    transform: Transform::Identity,
                })
                .collect(),
        }
    }

    /// Binds the map to a raw header, resolving each entry's source column to
    /// a position, so rows can then be converted without name lookups.
    pub fn bind(&self, header: &[String]) -> Result<BoundMap<'_>, DatasetError> {
        let positions = self
            .entries
            .iter()
            .map(|e| {
                header
                    .iter()
                    .position(|h| h == &e.source)
                    .ok_or_else(|| DatasetError::SchemaMismatch {
                        column: e.source.clone(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BoundMap {
            map: self,
            positions,
        })
    }

    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct EntryRepr<'a> {
            source: &'a str,
            transform: &'static str,
            #[serde(skip_serializing_if = "Option::is_none")]
            threshold: Option<f64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            category: Option<&'a str>,
            name: String,
        }
        #[derive(Serialize)]
        struct MapRepr<'a> {
            version: u32,
            entries: Vec<EntryRepr<'a>>,
        }
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let (transform, threshold, category) = match &e.transform {
                    Transform::Identity => ("identity", None, None),
                    Transform::Complement => ("complement", None, None),
                    Transform::OneHot { category } => ("onehot", None, Some(category.as_str())),
                    Transform::Gt { threshold } => ("gt", Some(*threshold), None),
                    Transform::Le { threshold } => ("le", Some(*threshold), None),
                };
                EntryRepr {
                    source: &e.source,
                    transform,
                    threshold,
                    category,
                    name: e.display_name(),
                }
            })
            .collect();
        toml::to_string_pretty(&MapRepr {
            version: 1,
            entries,
        })
        .expect("feature map serialization cannot fail")
    }

    pub fn from_toml(text: &str) -> Result<FeatureMap, DatasetError> {
        #[derive(Deserialize)]
        struct EntryRepr {
            source: String,
            transform: String,
            threshold: Option<f64>,
            category: Option<String>,
        }
        #[derive(Deserialize)]
        struct MapRepr {
            version: u32,
            entries: Vec<EntryRepr>,
        }
        let repr: MapRepr = toml::from_str(text).map_err(|e| DatasetError::MapFormat {
            detail: e.to_string(),
        })?;
        if repr.version != 1 {
            return Err(DatasetError::MapFormat {
                detail: format!("unsupported feature map version {}", repr.version),
            });
        }
        let entries = repr
            .entries
            .into_iter()
            .map(|e| {
                let transform = match e.transform.as_str() {
                    "identity" => Transform::Identity,
                    "complement" => Transform::Complement,
                    "onehot" => Transform::OneHot {
                        category: e.category.ok_or_else(|| DatasetError::MapFormat {
                            detail: "onehot entry without category".into(),
                        })?,
                    },
                    "gt" => Transform::Gt {
                        threshold: e.threshold.ok_or_else(|| DatasetError::MapFormat {
                            detail: "gt entry without threshold".into(),
                        })?,
                    },
                    "le" => Transform::Le {
                        threshold: e.threshold.ok_or_else(|| DatasetError::MapFormat {
                            detail: "le entry without threshold".into(),
                        })?,
                    },
                    other => {
                        return Err(DatasetError::MapFormat {
                            detail: format!("unknown transform '{other}'"),
                        })
                    }
                };
                Ok(BinFeature {
                    source: e.source,
                    transform,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FeatureMap { entries })
    }

    pub fn save(&self, path: &Path) -> Result<(), DatasetError> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<FeatureMap, DatasetError> {
        let text = std::fs::read_to_string(path)?;
        FeatureMap::from_toml(&text)
    }
}

/// A [`FeatureMap`] resolved against a concrete column header.
pub struct BoundMap<'a> {
    map: &'a FeatureMap,
    positions: Vec<usize>,
}

impl BoundMap<'_> {
    /// Converts one raw row (cells in header order) into a binary row.
    ///
    /// Unseen categorical values leave their whole one-hot group at zero; a
    /// warning is logged per offending cell. Missing values are errors.
    pub fn apply(&self, cells: &[Cell]) -> Result<Vec<bool>, DatasetError> {
        self.apply_indexed(cells, 0)
    }

    pub(crate) fn apply_indexed(
        &self,
        cells: &[Cell],
        row: usize,
    ) -> Result<Vec<bool>, DatasetError> {
        let mut out = Vec::with_capacity(self.map.entries.len());
        // (source position, any one-hot hit) per categorical group touched
        let mut group_hits: BTreeMap<usize, bool> = BTreeMap::new();
        for (entry, &pos) in self.map.entries.iter().zip(&self.positions) {
            let cell = cells.get(pos).ok_or_else(|| DatasetError::SchemaMismatch {
                column: entry.source.clone(),
            })?;
            let bit = entry.evaluate(cell, &entry.source, row)?;
            if matches!(entry.transform, Transform::OneHot { .. }) {
                let hit = group_hits.entry(pos).or_insert(false);
                *hit = *hit || bit;
            }
            out.push(bit);
        }
        for (&pos, &hit) in &group_hits {
            if !hit {
                let source = &self.map.entries[self.positions.iter().position(|p| *p == pos)
                    .expect("group position came from this map")]
                .source;
                log::warn!(
                    "row {}: value {:?} of column '{}' matches no training category; \
                     one-hot group left all-zero",
                    row + 1,
                    cell_text(&cells[pos]),
                    source,
                );
            }
        }
        Ok(out)
    }
}

/// Applies a feature map to one raw row given as `(column name, cell)` pairs.
pub fn apply_map(map: &FeatureMap, row: &[(String, Cell)]) -> Result<Vec<bool>, DatasetError> {
    let header: Vec<String> = row.iter().map(|(n, _)| n.clone()).collect();
    let cells: Vec<Cell> = row.iter().map(|(_, c)| c.clone()).collect();
    map.bind(&header)?.apply(&cells)
}

/// Fully binarized dataset: an `n x m` 0/1 matrix, labels, and feature names.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryDataset {
    rows: Vec<Vec<bool>>,
    labels: Vec<bool>,
    feature_names: Vec<String>,
}

impl BinaryDataset {
    /// Builds a dataset from parts, validating shape.
    ///
    /// Constant columns are rejected by [`binarize`] but tolerated here (with
    /// a warning) because externally supplied binary matrices may contain
    /// them deliberately.
    pub fn new(
        rows: Vec<Vec<bool>>,
        labels: Vec<bool>,
        feature_names: Vec<String>,
    ) -> Result<Self, DatasetError> {
        if rows.is_empty() || labels.is_empty() {
            return Err(DatasetError::EmptyTable);
        }
        if rows.len() != labels.len() {
            return Err(DatasetError::RaggedColumn {
                column: "<labels>".into(),
                expected: rows.len(),
                got: labels.len(),
            });
        }
        let m = feature_names.len();
        if m == 0 {
            return Err(DatasetError::NoUsableFeatures);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(DatasetError::RaggedColumn {
                    column: format!("<row {}>", i + 1),
                    expected: m,
                    got: row.len(),
                });
            }
        }
        for j in 0..m {
            let first = rows[0][j];
            if rows.iter().all(|r| r[j] == first) {
                log::warn!(
                    "binary feature '{}' is constant over this dataset",
                    feature_names[j]
                );
            }
        }
        Ok(BinaryDataset {
            rows,
            labels,
            feature_names,
        })
    }

    pub fn num_samples(&self) -> usize {
        self.rows.len()
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// New dataset holding the given sample indices, in order.
    pub fn subset(&self, indices: &[usize]) -> BinaryDataset {
        BinaryDataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Same rows and names with every label negated (the DNF duality).
    pub fn with_negated_labels(&self) -> BinaryDataset {
        BinaryDataset {
            rows: self.rows.clone(),
            labels: self.labels.iter().map(|&y| !y).collect(),
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Threshold placement for continuous columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinarizeStrategy {
    /// Thresholds at the 1/q .. q/q empirical quantiles (data values).
    Quantile,
    /// Thresholds at q equal steps across the observed range.
    Uniform,
}

/// What to do with rows containing missing cells during CSV ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    /// Reject the file, listing the offending rows.
    #[default]
    Strict,
    /// Drop offending rows (logged).
    DropRows,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("empty table: no rows")]
    EmptyTable,
    #[error("column '{column}' has {got} values, expected {expected}")]
    RaggedColumn {
        column: String,
        expected: usize,
        got: usize,
    },
    #[error("thresholds-per-feature must be at least 1")]
    InvalidThresholdCount,
    #[error("missing values under strict policy: {detail}")]
    MissingValues { detail: String },
    #[error("non-numeric value '{value}' in continuous column '{column}' (row {})", row + 1)]
    NonNumeric {
        column: String,
        row: usize,
        value: String,
    },
    #[error("value '{value}' in binary column '{column}' (row {}) is not 0/1", row + 1)]
    NotBinaryValue {
        column: String,
        row: usize,
        value: String,
    },
    #[error("no usable binary features remain after binarization")]
    NoUsableFeatures,
    #[error("schema mismatch: column '{column}' not found in input")]
    SchemaMismatch { column: String },
    #[error("label column '{0}' not found")]
    LabelColumnMissing(String),
    #[error("label '{value}' in row {} is not binary (use a positive-label mapping)", row + 1)]
    LabelNotBinary { row: usize, value: String },
    #[error("feature map format: {detail}")]
    MapFormat { detail: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Options for [`load_csv`].
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub label_column: String,
    /// When set, label = 1 iff the raw label equals this text; otherwise raw
    /// labels must already be 0/1.
    pub positive_label: Option<String>,
    /// Per-column kind overrides; unlisted columns are inferred.
    pub kind_overrides: BTreeMap<String, ColumnKind>,
    /// Numeric columns with at most this many distinct values are inferred
    /// categorical.
    pub categorical_cap: usize,
    pub missing: MissingPolicy,
}

impl CsvOptions {
    pub fn new(label_column: impl Into<String>) -> Self {
        CsvOptions {
            delimiter: b',',
            label_column: label_column.into(),
            positive_label: None,
            kind_overrides: BTreeMap::new(),
            categorical_cap: 10,
            missing: MissingPolicy::Strict,
        }
    }
}

/// Loads a delimited text file with a header row into a [`RawTable`].
pub fn load_csv(path: &Path, opts: &CsvOptions) -> Result<RawTable, DatasetError> {
    let file = std::fs::File::open(path)?;
    load_csv_reader(file, opts)
}

/// Same as [`load_csv`] but from any reader (used by tests).
pub fn load_csv_reader(reader: impl Read, opts: &CsvOptions) -> Result<RawTable, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
    let label_idx = header
        .iter()
        .position(|h| h == &opts.label_column)
        .ok_or_else(|| DatasetError::LabelColumnMissing(opts.label_column.clone()))?;

    let mut cells: Vec<Vec<Cell>> = vec![Vec::new(); header.len()];
    for record in rdr.records() {
        let record = record?; // ragged rows are csv::Error::UnequalLengths
        for (j, field) in record.iter().enumerate() {
            cells[j].push(Cell::parse(field));
        }
    }
    let n_raw = cells[label_idx].len();
    if n_raw == 0 {
        return Err(DatasetError::EmptyTable);
    }

    // missing-value policy over whole rows (label included)
    let mut offending: Vec<usize> = Vec::new();
    for i in 0..n_raw {
        if cells.iter().any(|col| col[i].is_missing()) {
            offending.push(i);
        }
    }
    let keep: Vec<usize> = match opts.missing {
        MissingPolicy::Strict if !offending.is_empty() => {
            let shown: Vec<String> = offending
                .iter()
                .take(8)
                .map(|i| (i + 2).to_string()) // +2: header line + 1-based
                .collect();
            let suffix = if offending.len() > 8 {
                format!(" (and {} more)", offending.len() - 8)
            } else {
                String::new()
            };
            return Err(DatasetError::MissingValues {
                detail: format!("file lines {}{}", shown.join(", "), suffix),
            });
        }
        MissingPolicy::Strict => (0..n_raw).collect(),
        MissingPolicy::DropRows => {
            if !offending.is_empty() {
                log::warn!("dropping {} rows with missing values", offending.len());
            }
            (0..n_raw).filter(|i| !offending.contains(i)).collect()
        }
    };
    if keep.is_empty() {
        return Err(DatasetError::EmptyTable);
    }

    let mut labels = Vec::with_capacity(keep.len());
    for &i in &keep {
        let cell = &cells[label_idx][i];
        let value = match &opts.positive_label {
            Some(positive) => cell.category_label().as_deref() == Some(positive.as_str()),
            None => as_binary(cell).ok_or_else(|| DatasetError::LabelNotBinary {
                row: i,
                value: cell_text(cell),
            })?,
        };
        labels.push(value);
    }

    let mut columns = Vec::new();
    for (j, name) in header.iter().enumerate() {
        if j == label_idx {
            continue;
        }
        let values: Vec<Cell> = keep.iter().map(|&i| cells[j][i].clone()).collect();
        let kind = opts
            .kind_overrides
            .get(name)
            .copied()
            .unwrap_or_else(|| infer_kind(&values, opts.categorical_cap));
        columns.push(RawColumn {
            name: name.clone(),
            kind,
            values,
        });
    }
    RawTable::new(columns, labels)
}

/// Kind inference: binary if all values are 0/1; categorical if any value is
/// text or the distinct numeric count is at most `cap`; continuous otherwise.
fn infer_kind(values: &[Cell], cap: usize) -> ColumnKind {
    let mut all_binary = true;
    let mut any_text = false;
    let mut distinct: Vec<u64> = Vec::new();
    for c in values {
        match c {
            Cell::Num(v) => {
                if *v != 0.0 && *v != 1.0 {
                    all_binary = false;
                }
                let bits = v.to_bits();
                if !distinct.contains(&bits) {
                    distinct.push(bits);
                }
            }
            Cell::Text(_) => {
                any_text = true;
                all_binary = false;
            }
            Cell::Missing => {}
        }
    }
    if all_binary && !any_text {
        ColumnKind::Binary
    } else if any_text || distinct.len() <= cap {
        ColumnKind::Categorical
    } else {
        ColumnKind::Continuous
    }
}

/// Computes the threshold list for one continuous column.
///
/// Quantile strategy: the t/q empirical quantiles for t = 1..q, where the
/// p-quantile is the smallest data value v with fraction(values <= v) >= p;
/// duplicates collapse. Columns with fewer than q distinct values use every
/// distinct value instead. The indicator pair for a threshold is
/// `x > t` / `x <= t`, so the top quantile (the maximum) always yields a
/// constant pair and is dropped later.
fn thresholds(values: &[f64], q: usize, strategy: BinarizeStrategy) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mut uniques = sorted.clone();
    uniques.dedup();
    if uniques.len() < q {
        return uniques;
    }
    let n = sorted.len();
    let mut cuts = Vec::with_capacity(q);
    match strategy {
        BinarizeStrategy::Quantile => {
            for t in 1..=q {
                // smallest v with count(values <= v) >= ceil(n * t / q)
                let needed = (n * t).div_ceil(q);
                cuts.push(sorted[needed - 1]);
            }
        }
        BinarizeStrategy::Uniform => {
            let (lo, hi) = (sorted[0], sorted[n - 1]);
            for t in 1..=q {
                cuts.push(lo + (hi - lo) * t as f64 / q as f64);
            }
        }
    }
    cuts.dedup();
    cuts
}

/// One candidate binary column plus its map entry; `pair` links the two
/// directions of a threshold or identity/complement pair so they are kept or
/// dropped together.
struct Candidate {
    entry: BinFeature,
    column: Vec<bool>,
    pair: Option<usize>,
    one_hot: bool,
}

/// Converts a raw table into a binary dataset plus the feature map that
/// reproduces it.
///
/// `thresholds_per_feature` is the q of the threshold rule; `strategy` picks
/// quantile or uniform cuts. Constant indicator columns are dropped (they
/// cannot discriminate), as are exact duplicates of earlier columns; paired
/// directions are dropped atomically so every kept threshold keeps both
/// directions. One-hot columns are only dropped when constant, which keeps
/// each seen category's group summing to one.
pub fn binarize(
    raw: &RawTable,
    thresholds_per_feature: usize,
    strategy: BinarizeStrategy,
) -> Result<(BinaryDataset, FeatureMap), DatasetError> {
    if thresholds_per_feature == 0 {
        return Err(DatasetError::InvalidThresholdCount);
    }
    if raw.columns.is_empty() {
        return Err(DatasetError::NoUsableFeatures);
    }
    let n = raw.num_rows();
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut pair_counter = 0usize;

    for col in &raw.columns {
        if let Some(i) = col.values.iter().position(Cell::is_missing) {
            return Err(DatasetError::MissingValues {
                detail: format!("column '{}', row {}", col.name, i + 1),
            });
        }
        match col.kind {
            ColumnKind::Binary => {
                let mut bits = Vec::with_capacity(n);
                for (i, c) in col.values.iter().enumerate() {
                    bits.push(as_binary(c).ok_or_else(|| DatasetError::NotBinaryValue {
                        column: col.name.clone(),
                        row: i,
                        value: cell_text(c),
                    })?);
                }
                let pair = Some(pair_counter);
                pair_counter += 1;
                candidates.push(Candidate {
                    entry: BinFeature {
                        source: col.name.clone(),
                        transform: Transform::Identity,
                    },
                    column: bits.clone(),
                    pair,
                    one_hot: false,
                });
                candidates.push(Candidate {
                    entry: BinFeature {
                        source: col.name.clone(),
                        transform: Transform::Complement,
                    },
                    column: bits.iter().map(|b| !b).collect(),
                    pair,
                    one_hot: false,
                });
            }
            ColumnKind::Categorical => {
                let mut categories: Vec<String> = Vec::new();
                let labels: Vec<String> = col
                    .values
                    .iter()
                    .map(|c| c.category_label().expect("missing handled above"))
                    .collect();
                for l in &labels {
                    if !categories.contains(l) {
                        categories.push(l.clone());
                    }
                }
                for cat in &categories {
                    candidates.push(Candidate {
                        entry: BinFeature {
                            source: col.name.clone(),
                            transform: Transform::OneHot {
                                category: cat.clone(),
                            },
                        },
                        column: labels.iter().map(|l| l == cat).collect(),
                        pair: None,
                        one_hot: true,
                    });
                }
            }
            ColumnKind::Continuous => {
                let mut nums = Vec::with_capacity(n);
                for (i, c) in col.values.iter().enumerate() {
                    match c {
                        Cell::Num(v) => nums.push(*v),
                        other => {
                            return Err(DatasetError::NonNumeric {
                                column: col.name.clone(),
                                row: i,
                                value: cell_text(other),
                            })
                        }
                    }
                }
                for tau in thresholds(&nums, thresholds_per_feature, strategy) {
                    let pair = Some(pair_counter);
                    pair_counter += 1;
                    candidates.push(Candidate {
                        entry: BinFeature {
                            source: col.name.clone(),
                            transform: Transform::Gt { threshold: tau },
                        },
                        column: nums.iter().map(|v| *v > tau).collect(),
                        pair,
                        one_hot: false,
                    });
                    candidates.push(Candidate {
                        entry: BinFeature {
                            source: col.name.clone(),
                            transform: Transform::Le { threshold: tau },
                        },
                        column: nums.iter().map(|v| *v <= tau).collect(),
                        pair,
                        one_hot: false,
                    });
                }
            }
        }
    }

    let kept = select_columns(candidates);
    if kept.is_empty() {
        return Err(DatasetError::NoUsableFeatures);
    }

    let entries: Vec<BinFeature> = kept.iter().map(|c| c.entry.clone()).collect();
    let names: Vec<String> = entries.iter().map(|e| e.display_name()).collect();
    let mut rows = vec![Vec::with_capacity(kept.len()); n];
    for cand in &kept {
        for (i, row) in rows.iter_mut().enumerate() {
            row.push(cand.column[i]);
        }
    }
    let dataset = BinaryDataset {
        rows,
        labels: raw.labels.clone(),
        feature_names: names,
    };
    Ok((dataset, FeatureMap { entries }))
}

/// Keep/drop pass: constants and duplicates go, pairs atomically.
fn select_columns(candidates: Vec<Candidate>) -> Vec<Candidate> {
    fn constant(col: &[bool]) -> bool {
        col.iter().all(|&b| b == col[0])
    }
    let mut kept: Vec<Candidate> = Vec::new();
    let mut seen: Vec<Vec<bool>> = Vec::new();
    let mut pending = candidates.into_iter().peekable();
    while let Some(cand) = pending.next() {
        if cand.pair.is_some() {
            let twin = pending.next().expect("pair members are adjacent");
            debug_assert_eq!(twin.pair, cand.pair);
            let dead = constant(&cand.column)
                || constant(&twin.column)
                || seen.contains(&cand.column)
                || seen.contains(&twin.column);
            if !dead {
                seen.push(cand.column.clone());
                seen.push(twin.column.clone());
                kept.push(cand);
                kept.push(twin);
            }
        } else {
            // one-hot: drop only constants; duplicate one-hot columns stay so
            // each seen category's group keeps summing to one
            let dead = constant(&cand.column) || (!cand.one_hot && seen.contains(&cand.column));
            if !dead {
                seen.push(cand.column.clone());
                kept.push(cand);
            }
        }
    }
    kept
}

/// Reads a delimited file into raw cells without interpreting any column
/// (no label handling, no missing-value policy); used to classify new rows.
pub fn load_csv_rows(
    path: &Path,
    delimiter: u8,
) -> Result<(Vec<String>, Vec<Vec<Cell>>), DatasetError> {
    let file = std::fs::File::open(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        rows.push(record.iter().map(Cell::parse).collect());
    }
    Ok((header, rows))
}

/// Reads a CSV of already-binary feature columns plus a label column,
/// returning the dataset and the identity feature map for it.
pub fn read_binary_csv(
    path: &Path,
    label_column: &str,
    delimiter: u8,
) -> Result<(BinaryDataset, FeatureMap), DatasetError> {
    let file = std::fs::File::open(path)?;
    read_binary_csv_reader(file, label_column, delimiter)
}

pub fn read_binary_csv_reader(
    reader: impl Read,
    label_column: &str,
    delimiter: u8,
) -> Result<(BinaryDataset, FeatureMap), DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| DatasetError::LabelColumnMissing(label_column.to_string()))?;
    let mut rows: Vec<Vec<bool>> = Vec::new();
    let mut labels: Vec<bool> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(header.len() - 1);
        for (j, field) in record.iter().enumerate() {
            let cell = Cell::parse(field);
            let bit = as_binary(&cell).ok_or_else(|| {
                if j == label_idx {
                    DatasetError::LabelNotBinary {
                        row: i,
                        value: cell_text(&cell),
                    }
                } else {
                    DatasetError::NotBinaryValue {
                        column: header[j].clone(),
                        row: i,
                        value: cell_text(&cell),
                    }
                }
            })?;
            if j == label_idx {
                labels.push(bit);
            } else {
                row.push(bit);
            }
        }
        rows.push(row);
    }
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let map = FeatureMap::identity(&feature_names);
    let data = BinaryDataset::new(rows, labels, feature_names)?;
    Ok((data, map))
}

/// Writes a binarized dataset as CSV (features then the label column).
pub fn write_binary_csv(
    data: &BinaryDataset,
    label_column: &str,
    out: impl std::io::Write,
) -> Result<(), DatasetError> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = data.feature_names.iter().map(|s| s.as_str()).collect();
    header.push(label_column);
    wtr.write_record(&header)?;
    for (row, &label) in data.rows.iter().zip(&data.labels) {
        let mut record: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        record.push(if label { "1" } else { "0" });
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}
