//! Ranked feature-importance reports and their JSON/CSV interchange.
//!
//! Any model, in-repo or external, enters the stability analysis through an
//! [`ImportanceReport`]. Entries are kept in canonical order: importance
//! descending, then feature name ascending.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("report schema violation: {0}")]
    SchemaViolation(String),
    #[error("importance of `{feature}` is {value}; importances must be finite and non-negative")]
    NonFiniteImportance { feature: String, value: f64 },
    #[error("k = {k} exceeds the {available} entries of the report")]
    KTooLarge { k: usize, available: usize },
    #[error("k must be positive")]
    ZeroK,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub feature: String,
    pub importance: f64,
}

impl ImportanceEntry {
    pub fn new(feature: impl Into<String>, importance: f64) -> Self {
        Self {
            feature: feature.into(),
            importance,
        }
    }
}

/// Canonical entry order.
pub fn canonical_order(a: &ImportanceEntry, b: &ImportanceEntry) -> Ordering {
    b.importance
        .total_cmp(&a.importance)
        .then_with(|| a.feature.cmp(&b.feature))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceReport {
    #[serde(rename = "model")]
    model_name: String,
    dataset_tag: String,
    entries: Vec<ImportanceEntry>,
}

#[derive(Deserialize)]
struct ReportJson {
    model: String,
    dataset_tag: String,
    entries: Vec<ImportanceEntry>,
}

impl ImportanceReport {
    /// Validates and sorts `entries` into canonical order.
    pub fn new(
        model_name: impl Into<String>,
        dataset_tag: impl Into<String>,
        mut entries: Vec<ImportanceEntry>,
    ) -> Result<Self, ReportError> {
        if entries.is_empty() {
            return Err(ReportError::SchemaViolation("empty entry list".into()));
        }
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if e.feature.is_empty() {
                return Err(ReportError::SchemaViolation("empty feature name".into()));
            }
            if !seen.insert(e.feature.as_str()) {
                return Err(ReportError::SchemaViolation(format!("duplicate feature `{}`", e.feature)));
            }
            if !e.importance.is_finite() || e.importance < 0.0 {
                return Err(ReportError::NonFiniteImportance {
                    feature: e.feature.clone(),
                    value: e.importance,
                });
            }
        }
        for e in &mut entries {
            // -0.0 sorts below 0.0 under total_cmp
            e.importance += 0.0;
        }
        entries.sort_by(canonical_order);
        Ok(Self {
            model_name: model_name.into(),
            dataset_tag: dataset_tag.into(),
            entries,
        })
    }

    pub fn model_name(&self) -> &str {
        &self.model_name
    }

    pub fn dataset_tag(&self) -> &str {
        &self.dataset_tag
    }

    pub fn entries(&self) -> &[ImportanceEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Importance of `feature`, `None` when absent.
    pub fn importance(&self, feature: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.feature == feature).map(|e| e.importance)
    }

    /// 1-based rank of `feature`.
    pub fn rank(&self, feature: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.feature == feature).map(|i| i + 1)
    }

    pub fn with_labels(mut self, model_name: impl Into<String>, dataset_tag: impl Into<String>) -> Self {
        self.model_name = model_name.into();
        self.dataset_tag = dataset_tag.into();
        self
    }

    /// First `k` entries in canonical order.
    pub fn top_k(&self, k: usize) -> Result<ImportanceReport, ReportError> {
        if k == 0 {
            return Err(ReportError::ZeroK);
        }
        if k > self.entries.len() {
            return Err(ReportError::KTooLarge {
                k,
                available: self.entries.len(),
            });
        }
        Ok(ImportanceReport {
            model_name: self.model_name.clone(),
            dataset_tag: self.dataset_tag.clone(),
            entries: self.entries[..k].to_vec(),
        })
    }

    /// Feature names of the first `k` entries.
    pub fn top_features(&self, k: usize) -> Result<Vec<&str>, ReportError> {
        if k == 0 {
            return Err(ReportError::ZeroK);
        }
        if k > self.entries.len() {
            return Err(ReportError::KTooLarge {
                k,
                available: self.entries.len(),
            });
        }
        Ok(self.entries[..k].iter().map(|e| e.feature.as_str()).collect())
    }

    /// `{model, dataset_tag, entries: [{feature, importance}]}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let raw: ReportJson = serde_json::from_str(text).map_err(|e| ReportError::SchemaViolation(e.to_string()))?;
        ImportanceReport::new(raw.model, raw.dataset_tag, raw.entries)
    }

    /// `rank,feature,importance` rows in canonical order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| ReportError::SchemaViolation(e.to_string());
        w.write_record(["rank", "feature", "importance"]).map_err(csv_err)?;
        for (i, e) in self.entries.iter().enumerate() {
            w.write_record([(i + 1).to_string(), e.feature.clone(), e.importance.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Parses the CSV interchange. CSV carries no labels, so the caller
    /// supplies them. Rows are re-sorted canonically; the `rank` column is
    /// validated but not trusted.
    pub fn read_csv<R: Read>(
        reader: R,
        model_name: impl Into<String>,
        dataset_tag: impl Into<String>,
    ) -> Result<Self, ReportError> {
        let schema = |m: String| ReportError::SchemaViolation(m);
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| schema(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_ascii_lowercase())
            .collect();
        let col = |name: &str| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| schema(format!("missing `{name}` column")))
        };
        let (rank_col, feature_col, importance_col) = (col("rank")?, col("feature")?, col("importance")?);
        let mut entries = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| schema(e.to_string()))?;
            let cell = |i: usize| record.get(i).unwrap_or("").trim();
            cell(rank_col)
                .parse::<usize>()
                .ok()
                .filter(|&r| r > 0)
                .ok_or_else(|| schema(format!("row {}: rank `{}` is not a positive integer", line + 1, cell(rank_col))))?;
            let importance: f64 = cell(importance_col)
                .parse()
                .map_err(|_| schema(format!("row {}: importance `{}` is not a number", line + 1, cell(importance_col))))?;
            entries.push(ImportanceEntry::new(cell(feature_col), importance));
        }
        ImportanceReport::new(model_name, dataset_tag, entries)
    }
}
