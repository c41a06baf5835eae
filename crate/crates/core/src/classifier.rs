//! Naive-Bayes-style classification over abstracted records.
//!
//! A record is scored against each class by
//!
//! ```text
//! score_c = ln(prior_c) + sum over observed features of ln(p_cf  if Up
//!                                                         1 - p_cf otherwise)
//! ```
//!
//! where `p_cf` is the Laplace-smoothed probability of `Up` given class `c`.
//! Missing cells contribute nothing, so a record with fewer observations is
//! judged on the evidence it still has.
//!
//! Feature significance is `|P(Up | 1) - P(Up | 0)|` over observed cells,
//! computed from raw proportions.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{AbstractedDataset, Category};
use crate::importance::{ImportanceEntry, ImportanceReport, ReportError};

/// Model name used on significance reports.
pub const MODEL_NAME: &str = "CACTUS";

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training data contains a single class")]
    SingleClassTraining,
    #[error("smoothing constant must be positive and finite, got {0}")]
    InvalidSmoothing(f64),
    #[error("feature `{0}` has no class profile")]
    UnknownFeature(String),
    #[error("record has {found} cells, profiles expect {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Report(#[from] ReportError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureProfile {
    pub feature: String,
    /// Smoothed `P(Up | class)`, indexed by class.
    pub p_up: [f64; 2],
}

/// Per-class `Up` probabilities and priors.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProfiles {
    alpha: f64,
    priors: [f64; 2],
    features: Vec<FeatureProfile>,
    index: HashMap<String, usize>,
    excluded: BTreeSet<String>,
}

impl ClassProfiles {
    /// Builds profiles directly, e.g. for tests or imported models.
    pub fn from_parts(
        alpha: f64,
        priors: [f64; 2],
        features: Vec<FeatureProfile>,
        excluded: BTreeSet<String>,
    ) -> Self {
        let index = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.feature.clone(), i))
            .collect();
        Self {
            alpha,
            priors,
            features,
            index,
            excluded,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn priors(&self) -> [f64; 2] {
        self.priors
    }

    pub fn features(&self) -> &[FeatureProfile] {
        &self.features
    }

    pub fn get(&self, feature: &str) -> Option<&FeatureProfile> {
        self.index.get(feature).map(|&i| &self.features[i])
    }

    /// Features that were degenerate at fit time and are ignored when scoring.
    pub fn excluded(&self) -> &BTreeSet<String> {
        &self.excluded
    }

    fn term(&self, profile: &FeatureProfile, class: usize, cell: Category) -> f64 {
        let p = profile.p_up[class];
        match cell {
            Category::Up => p.ln(),
            Category::Down => (1.0 - p).ln(),
        }
    }
}

/// Outcome of [`classify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: u8,
    pub scores: [f64; 2],
    /// Scores were equal; `label` fell back to 0.
    pub tie: bool,
}

fn check_classes(target: &[u8]) -> Result<[usize; 2], ClassifierError> {
    let pos = target.iter().filter(|&&t| t == 1).count();
    let counts = [target.len() - pos, pos];
    if counts[0] == 0 || counts[1] == 0 {
        return Err(ClassifierError::SingleClassTraining);
    }
    Ok(counts)
}

/// `[[up_0, observed_0], [up_1, observed_1]]` for one column.
fn up_counts(cells: &[Option<Category>], target: &[u8]) -> [[u64; 2]; 2] {
    let mut counts = [[0u64; 2]; 2];
    for (cell, &y) in cells.iter().zip(target) {
        if let Some(c) = cell {
            counts[y as usize][1] += 1;
            if *c == Category::Up {
                counts[y as usize][0] += 1;
            }
        }
    }
    counts
}

/// Fits smoothed class profiles:
/// `p_cf = (up_cf + alpha) / (observed_cf + 2 alpha)`, priors from class frequency.
pub fn fit_profiles(a: &AbstractedDataset, alpha: f64) -> Result<ClassProfiles, ClassifierError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(ClassifierError::InvalidSmoothing(alpha));
    }
    let counts = check_classes(&a.target)?;
    let n = a.target.len() as f64;
    let priors = [counts[0] as f64 / n, counts[1] as f64 / n];
    let mut features = Vec::new();
    let mut excluded = BTreeSet::new();
    for col in &a.columns {
        if !col.informative {
            excluded.insert(col.name.clone());
            continue;
        }
        let c = up_counts(&col.cells, &a.target);
        let p = |class: usize| (c[class][0] as f64 + alpha) / (c[class][1] as f64 + 2.0 * alpha);
        features.push(FeatureProfile {
            feature: col.name.clone(),
            p_up: [p(0), p(1)],
        });
    }
    Ok(ClassProfiles::from_parts(alpha, priors, features, excluded))
}

fn decide(scores: [f64; 2]) -> Prediction {
    let tie = scores[0] == scores[1];
    Prediction {
        label: u8::from(scores[1] > scores[0]),
        scores,
        tie,
    }
}

/// Scores one record given as `(feature, cell)` pairs.
///
/// Features excluded at fit time are skipped; any other feature without a
/// profile is an error.
pub fn classify<'a, I>(profiles: &ClassProfiles, record: I) -> Result<Prediction, ClassifierError>
where
    I: IntoIterator<Item = (&'a str, Option<Category>)>,
{
    let mut scores = [profiles.priors[0].ln(), profiles.priors[1].ln()];
    for (feature, cell) in record {
        let profile = match profiles.get(feature) {
            Some(p) => p,
            None if profiles.excluded.contains(feature) => continue,
            None => return Err(ClassifierError::UnknownFeature(feature.to_string())),
        };
        if let Some(cell) = cell {
            for (class, score) in scores.iter_mut().enumerate() {
                *score += profiles.term(profile, class, cell);
            }
        }
    }
    Ok(decide(scores))
}

/// Scores every row of `a`. Column lookups are resolved once.
pub fn classify_dataset(profiles: &ClassProfiles, a: &AbstractedDataset) -> Result<Vec<Prediction>, ClassifierError> {
    let mut resolved = Vec::with_capacity(a.columns.len());
    for col in &a.columns {
        match profiles.get(&col.name) {
            Some(p) => resolved.push((p, &col.cells)),
            None if profiles.excluded.contains(&col.name) => {}
            None => return Err(ClassifierError::UnknownFeature(col.name.clone())),
        }
    }
    let base = [profiles.priors[0].ln(), profiles.priors[1].ln()];
    Ok((0..a.row_count())
        .map(|row| {
            let mut scores = base;
            for (profile, cells) in &resolved {
                if let Some(cell) = cells[row] {
                    for (class, score) in scores.iter_mut().enumerate() {
                        *score += profiles.term(profile, class, cell);
                    }
                }
            }
            decide(scores)
        })
        .collect())
}

/// Discriminative strength of every feature as an importance report tagged
/// with the dataset name. Features that were degenerate at fit time, or lack
/// observations in a class, score 0.
pub fn significance(a: &AbstractedDataset) -> Result<ImportanceReport, ClassifierError> {
    check_classes(&a.target)?;
    let entries = a
        .columns
        .iter()
        .map(|col| {
            let s = if col.informative {
                let c = up_counts(&col.cells, &a.target);
                if c[0][1] == 0 || c[1][1] == 0 {
                    0.0
                } else {
                    let rate = |class: usize| c[class][0] as f64 / c[class][1] as f64;
                    (rate(1) - rate(0)).abs().clamp(0.0, 1.0)
                }
            } else {
                0.0
            };
            ImportanceEntry::new(col.name.clone(), s)
        })
        .collect();
    Ok(ImportanceReport::new(MODEL_NAME, a.name.clone(), entries)?)
}
