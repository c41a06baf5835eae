//! MCAR missingness injection.
//!
//! Each level removes an exact number of additional feature cells, drawn
//! uniformly without replacement from the cells that are still observed.
//! Levels are independent draws against the same source table, not nested.

use std::cmp::Ordering;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tabular::Dataset;

#[derive(Debug, Error, PartialEq)]
pub enum MissingnessError {
    #[error("missingness fraction {0} outside [0, 1)")]
    InvalidFraction(f64),
    #[error("cannot remove {requested} cells, only {available} observed feature cells remain")]
    InfeasibleFraction { requested: usize, available: usize },
    #[error("injection plans must protect the target column")]
    UnprotectedTarget,
}

/// Fraction of feature cells to remove, in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct MissingnessLevel(f64);

impl MissingnessLevel {
    pub const COMPLETE: MissingnessLevel = MissingnessLevel(0.0);

    pub fn new(fraction: f64) -> Result<Self, MissingnessError> {
        if (0.0..1.0).contains(&fraction) {
            // normalise -0.0 so equal levels compare and hash identically
            Ok(Self(fraction + 0.0))
        } else {
            Err(MissingnessError::InvalidFraction(fraction))
        }
    }

    /// The experiment grid 0%, 10%, 20%, 30%.
    pub fn canonical_grid() -> Vec<MissingnessLevel> {
        [0.0, 0.10, 0.20, 0.30].into_iter().map(MissingnessLevel).collect()
    }

    pub fn fraction(self) -> f64 {
        self.0
    }

    pub fn is_complete(self) -> bool {
        self.0 == 0.0
    }

    /// Whole-percent label, e.g. `10%`.
    pub fn percent_label(self) -> String {
        format!("{}%", (self.0 * 100.0 * 1e6).round() / 1e6)
    }

    /// Dataset tag for a cohort at this level: `total` or `total+10%`.
    pub fn tag(self, cohort: &str) -> String {
        if self.is_complete() {
            cohort.to_string()
        } else {
            format!("{cohort}+{}", self.percent_label())
        }
    }

    /// Inverse of [`MissingnessLevel::tag`]: splits `cohort+NN%` into its parts.
    pub fn parse_tag(tag: &str) -> Result<(String, MissingnessLevel), MissingnessError> {
        if let Some((cohort, pct)) = tag.rsplit_once('+') {
            if let Some(num) = pct.strip_suffix('%') {
                if let Ok(p) = num.trim().parse::<f64>() {
                    return Ok((cohort.to_string(), MissingnessLevel::new(p / 100.0)?));
                }
            }
        }
        Ok((tag.to_string(), MissingnessLevel::COMPLETE))
    }
}

impl TryFrom<f64> for MissingnessLevel {
    type Error = MissingnessError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        MissingnessLevel::new(value)
    }
}

impl From<MissingnessLevel> for f64 {
    fn from(level: MissingnessLevel) -> f64 {
        level.0
    }
}

impl Eq for MissingnessLevel {}

impl PartialOrd for MissingnessLevel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MissingnessLevel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for MissingnessLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectionPlan {
    pub level: MissingnessLevel,
    pub seed: u64,
    pub protect_target: bool,
}

impl InjectionPlan {
    pub fn new(level: MissingnessLevel, seed: u64) -> Self {
        Self {
            level,
            seed,
            protect_target: true,
        }
    }
}

/// Number of cells removed at `fraction` of `total` cells.
///
/// `floor(fraction * total)`, with a relative guard so that products like
/// `0.3 * 10000` that land a hair under an integer still floor to it.
pub fn injection_count(fraction: f64, total: usize) -> usize {
    let exact = fraction * total as f64;
    (exact + exact.abs() * 1e-12).floor() as usize
}

/// Returns a copy of `d` with `floor(fraction * total_feature_cells)` extra
/// missing cells. The target column is never touched.
pub fn inject_mcar(d: &Dataset, plan: &InjectionPlan) -> Result<Dataset, MissingnessError> {
    if !plan.protect_target {
        return Err(MissingnessError::UnprotectedTarget);
    }
    let rows = d.row_count();
    let total = rows * d.feature_count();
    let requested = injection_count(plan.level.fraction(), total);
    if requested == 0 {
        return Ok(d.clone());
    }

    // observed cells, column-major
    let pool: Vec<(usize, usize)> = d
        .columns()
        .iter()
        .enumerate()
        .flat_map(|(c, col)| {
            (0..rows)
                .filter(move |&r| !col.data().is_missing(r))
                .map(move |r| (c, r))
        })
        .collect();
    if pool.len() < requested {
        return Err(MissingnessError::InfeasibleFraction {
            requested,
            available: pool.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let chosen = rand::seq::index::sample(&mut rng, pool.len(), requested);
    let mut out = d.clone();
    let columns = out.columns_mut();
    for i in chosen {
        let (c, r) = pool[i];
        columns[c].data_mut().set_missing(r);
    }
    Ok(out)
}

/// Share of feature cells that are missing.
pub fn missing_fraction(d: &Dataset) -> f64 {
    let total = d.row_count() * d.feature_count();
    if total == 0 {
        return 0.0;
    }
    let missing: usize = d.columns().iter().map(|c| c.data().missing_count()).sum();
    missing as f64 / total as f64
}
