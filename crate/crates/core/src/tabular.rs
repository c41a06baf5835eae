//! Tabular datasets with explicit missing cells and a binary target.
//!
//! A [`Dataset`] is an immutable, column-oriented table. Continuous cells are
//! `Option<f64>` and categorical cells are `Option<u32>` codes into a sorted
//! level set, so missingness never hides behind a `NaN` sentinel.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while building, loading or reshaping a [`Dataset`].
#[derive(Debug, Error)]
pub enum TabularError {
    #[error("target column `{0}` not found in header")]
    MissingTarget(String),
    #[error("target cell `{value}` on data row {row} is not 0 or 1")]
    NonBinaryTarget { row: usize, value: String },
    #[error("data row {row} has {found} cells, header has {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("dataset has no data rows")]
    EmptyDataset,
    #[error("dataset has no feature columns")]
    NoFeatures,
    #[error("duplicate or empty feature name `{0}`")]
    InvalidFeatureName(String),
    #[error("column `{column}` has {found} cells, expected {expected}")]
    LengthMismatch {
        column: String,
        expected: usize,
        found: usize,
    },
    #[error("cell `{value}` in continuous column `{column}` is not a finite number")]
    InvalidNumber { column: String, value: String },
    #[error("categorical column `{column}` has code {code} outside its {levels} levels")]
    InvalidLevelCode {
        column: String,
        code: u32,
        levels: usize,
    },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` is not categorical")]
    NotCategorical(String),
    #[error("split is infeasible: {0}")]
    InfeasibleSplit(String),
    #[error("row index {0} out of range")]
    RowOutOfRange(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Whether a feature holds numbers or levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    Categorical,
}

/// Cell storage of a [`FeatureColumn`].
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Continuous(Vec<Option<f64>>),
    /// `codes[i]` indexes into `levels`; `levels` is sorted and duplicate free.
    Categorical {
        levels: Vec<String>,
        codes: Vec<Option<u32>>,
    },
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Continuous(v) => v.len(),
            ColumnData::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            ColumnData::Continuous(v) => v[row].is_none(),
            ColumnData::Categorical { codes, .. } => codes[row].is_none(),
        }
    }

    pub fn missing_count(&self) -> usize {
        match self {
            ColumnData::Continuous(v) => v.iter().filter(|c| c.is_none()).count(),
            ColumnData::Categorical { codes, .. } => codes.iter().filter(|c| c.is_none()).count(),
        }
    }

    fn select(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Continuous(v) => ColumnData::Continuous(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Categorical { levels, codes } => ColumnData::Categorical {
                levels: levels.clone(),
                codes: rows.iter().map(|&r| codes[r]).collect(),
            },
        }
    }

    pub(crate) fn set_missing(&mut self, row: usize) {
        match self {
            ColumnData::Continuous(v) => v[row] = None,
            ColumnData::Categorical { codes, .. } => codes[row] = None,
        }
    }
}

/// A named feature column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumn {
    name: String,
    data: ColumnData,
}

impl FeatureColumn {
    /// Builds a continuous column, rejecting non-finite values.
    pub fn continuous(name: impl Into<String>, values: Vec<Option<f64>>) -> Result<Self, TabularError> {
        let name = name.into();
        if let Some(bad) = values.iter().flatten().find(|v| !v.is_finite()) {
            return Err(TabularError::InvalidNumber {
                column: name,
                value: bad.to_string(),
            });
        }
        Ok(Self {
            name,
            data: ColumnData::Continuous(values),
        })
    }

    /// Builds a categorical column from raw level strings. The level set is
    /// the sorted set of observed values.
    pub fn categorical<S: AsRef<str>>(name: impl Into<String>, values: &[Option<S>]) -> Self {
        let levels: Vec<String> = values
            .iter()
            .flatten()
            .map(|s| s.as_ref().to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let lookup: HashMap<&str, u32> = levels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i as u32))
            .collect();
        let codes = values
            .iter()
            .map(|v| v.as_ref().map(|s| lookup[s.as_ref()]))
            .collect();
        Self {
            name: name.into(),
            data: ColumnData::Categorical { levels, codes },
        }
    }

    /// Builds a categorical column from codes into an explicit level set.
    pub fn from_codes(
        name: impl Into<String>,
        levels: Vec<String>,
        codes: Vec<Option<u32>>,
    ) -> Result<Self, TabularError> {
        let name = name.into();
        if let Some(&code) = codes.iter().flatten().find(|&&c| c as usize >= levels.len()) {
            return Err(TabularError::InvalidLevelCode {
                column: name,
                code,
                levels: levels.len(),
            });
        }
        Ok(Self {
            name,
            data: ColumnData::Categorical { levels, codes },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> FeatureKind {
        match self.data {
            ColumnData::Continuous(_) => FeatureKind::Continuous,
            ColumnData::Categorical { .. } => FeatureKind::Categorical,
        }
    }

    pub fn data(&self) -> &ColumnData {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut ColumnData {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Renders a cell the way it is written to CSV; `None` for missing.
    pub fn cell_text(&self, row: usize) -> Option<String> {
        match &self.data {
            ColumnData::Continuous(v) => v[row].map(|x| x.to_string()),
            ColumnData::Categorical { levels, codes } => codes[row].map(|c| levels[c as usize].clone()),
        }
    }
}

/// Immutable table of features plus a 0/1 target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    columns: Vec<FeatureColumn>,
    target: Vec<u8>,
}

impl Dataset {
    /// Validates shape, naming and target invariants.
    pub fn new(name: impl Into<String>, columns: Vec<FeatureColumn>, target: Vec<u8>) -> Result<Self, TabularError> {
        if columns.is_empty() {
            return Err(TabularError::NoFeatures);
        }
        if target.is_empty() {
            return Err(TabularError::EmptyDataset);
        }
        if let Some((row, &t)) = target.iter().enumerate().find(|(_, &t)| t > 1) {
            return Err(TabularError::NonBinaryTarget {
                row,
                value: t.to_string(),
            });
        }
        let mut seen = HashSet::new();
        for col in &columns {
            if col.name.is_empty() || !seen.insert(col.name.as_str()) {
                return Err(TabularError::InvalidFeatureName(col.name.clone()));
            }
            if col.len() != target.len() {
                return Err(TabularError::LengthMismatch {
                    column: col.name.clone(),
                    expected: target.len(),
                    found: col.len(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            columns,
            target,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Same data under a different name.
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn row_count(&self) -> usize {
        self.target.len()
    }

    pub fn feature_count(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub(crate) fn columns_mut(&mut self) -> &mut [FeatureColumn] {
        &mut self.columns
    }

    pub fn column(&self, name: &str) -> Option<&FeatureColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn feature_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn target(&self) -> &[u8] {
        &self.target
    }

    /// `[negatives, positives]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.target.iter().filter(|&&t| t == 1).count();
        [self.target.len() - pos, pos]
    }

    /// New dataset holding `rows` in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset, TabularError> {
        if let Some(&r) = rows.iter().find(|&&r| r >= self.row_count()) {
            return Err(TabularError::RowOutOfRange(r));
        }
        if rows.is_empty() {
            return Err(TabularError::EmptyDataset);
        }
        Ok(Dataset {
            name: self.name.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| FeatureColumn {
                    name: c.name.clone(),
                    data: c.data.select(rows),
                })
                .collect(),
            target: rows.iter().map(|&r| self.target[r]).collect(),
        })
    }

    /// Writes the dataset as CSV with the target as the last column.
    pub fn write_csv<W: Write>(&self, writer: W, target_name: &str) -> Result<(), TabularError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.feature_names().collect();
        header.push(target_name);
        w.write_record(&header)?;
        for row in 0..self.row_count() {
            let mut record: Vec<String> = self
                .columns
                .iter()
                .map(|c| c.cell_text(row).unwrap_or_default())
                .collect();
            record.push(self.target[row].to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Returns true for the tokens that denote a missing cell.
pub fn is_missing_token(cell: &str) -> bool {
    let cell = cell.trim();
    cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan")
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Loads a CSV file. See [`read_csv`].
pub fn load_csv(
    path: impl AsRef<Path>,
    target_name: &str,
    schema_hints: Option<&HashMap<String, FeatureKind>>,
) -> Result<Dataset, TabularError> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    read_csv(File::open(path)?, &name, target_name, schema_hints)
}

/// Parses RFC-4180 CSV with a mandatory header row.
///
/// Empty cells and `NA`/`NaN` (any case) are missing. A column without a hint
/// is continuous when every non-missing cell parses as a finite number and
/// categorical otherwise.
pub fn read_csv<R: Read>(
    reader: R,
    name: &str,
    target_name: &str,
    schema_hints: Option<&HashMap<String, FeatureKind>>,
) -> Result<Dataset, TabularError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let target_idx = header
        .iter()
        .position(|h| h == target_name)
        .ok_or_else(|| TabularError::MissingTarget(target_name.to_string()))?;

    let mut raw: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(TabularError::RaggedRow {
                row: row + 1,
                expected: header.len(),
                found: record.len(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            raw[col].push(cell.to_string());
        }
    }
    let rows = raw[target_idx].len();
    if rows == 0 {
        return Err(TabularError::EmptyDataset);
    }

    let target = raw[target_idx]
        .iter()
        .enumerate()
        .map(|(row, cell)| match cell.trim() {
            "0" => Ok(0u8),
            "1" => Ok(1u8),
            other => Err(TabularError::NonBinaryTarget {
                row: row + 1,
                value: other.to_string(),
            }),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut columns = Vec::with_capacity(header.len() - 1);
    for (idx, cells) in raw.iter().enumerate() {
        if idx == target_idx {
            continue;
        }
        let col_name = &header[idx];
        let hinted = schema_hints.and_then(|h| h.get(col_name)).copied();
        let kind = hinted.unwrap_or_else(|| {
            let numeric = cells
                .iter()
                .filter(|c| !is_missing_token(c))
                .all(|c| parse_number(c).is_some());
            if numeric {
                FeatureKind::Continuous
            } else {
                FeatureKind::Categorical
            }
        });
        let column = match kind {
            FeatureKind::Continuous => {
                let values = cells
                    .iter()
                    .map(|c| {
                        if is_missing_token(c) {
                            Ok(None)
                        } else {
                            parse_number(c).map(Some).ok_or_else(|| TabularError::InvalidNumber {
                                column: col_name.clone(),
                                value: c.clone(),
                            })
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                FeatureColumn::continuous(col_name.clone(), values)?
            }
            FeatureKind::Categorical => {
                let values: Vec<Option<&str>> = cells
                    .iter()
                    .map(|c| (!is_missing_token(c)).then(|| c.trim()))
                    .collect();
                FeatureColumn::categorical(col_name.clone(), &values)
            }
        };
        columns.push(column);
    }
    Dataset::new(name, columns, target)
}

/// Rows whose categorical `column` equals `level`, with that column dropped.
/// Rows missing the column are excluded.
pub fn stratify_subset(d: &Dataset, column: &str, level: &str) -> Result<Dataset, TabularError> {
    let idx = d
        .columns
        .iter()
        .position(|c| c.name == column)
        .ok_or_else(|| TabularError::UnknownColumn(column.to_string()))?;
    let (levels, codes) = match &d.columns[idx].data {
        ColumnData::Categorical { levels, codes } => (levels, codes),
        ColumnData::Continuous(_) => return Err(TabularError::NotCategorical(column.to_string())),
    };
    let rows: Vec<usize> = match levels.iter().position(|l| l == level) {
        Some(code) => codes
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == Some(code as u32))
            .map(|(r, _)| r)
            .collect(),
        None => Vec::new(),
    };
    if rows.is_empty() {
        return Err(TabularError::EmptyDataset);
    }
    let mut subset = d.select_rows(&rows)?;
    subset.columns.remove(idx);
    if subset.columns.is_empty() {
        return Err(TabularError::NoFeatures);
    }
    subset.name = format!("{}[{}={}]", d.name, column, level);
    Ok(subset)
}

/// Parameters of a holdout split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(test_fraction: f64, seed: u64, stratified: bool) -> Self {
        Self {
            test_fraction,
            seed,
            stratified,
        }
    }
}

fn test_size(n: usize, fraction: f64) -> usize {
    (fraction * n as f64).round() as usize
}

/// Seeded holdout split into `(train, test)`. Both partitions keep the source
/// row order. With `stratified`, each class is split separately, so every
/// class appears in both partitions.
pub fn split(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset), TabularError> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(TabularError::InfeasibleSplit(format!(
            "test fraction {} outside (0, 1)",
            spec.test_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let groups: Vec<Vec<usize>> = if spec.stratified {
        (0..=1u8)
            .map(|class| (0..d.row_count()).filter(|&r| d.target[r] == class).collect())
            .collect()
    } else {
        vec![(0..d.row_count()).collect()]
    };

    let mut train = Vec::with_capacity(d.row_count());
    let mut test = Vec::new();
    for (g, mut rows) in groups.into_iter().enumerate() {
        let n_test = test_size(rows.len(), spec.test_fraction);
        if n_test == 0 || n_test >= rows.len() {
            let what = if spec.stratified {
                format!("class {g} with {} rows", rows.len())
            } else {
                format!("{} rows", rows.len())
            };
            return Err(TabularError::InfeasibleSplit(format!(
                "{what} cannot give both partitions a row at test fraction {}",
                spec.test_fraction
            )));
        }
        rows.shuffle(&mut rng);
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((d.select_rows(&train)?, d.select_rows(&test)?))
}
