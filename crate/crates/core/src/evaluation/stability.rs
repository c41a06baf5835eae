use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::EvaluationError;
use crate::importance::ImportanceReport;
use crate::missingness::MissingnessLevel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelChange {
    pub level: MissingnessLevel,
    pub change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStability {
    pub feature: String,
    /// Importance on the complete data.
    pub baseline: f64,
    pub changes: Vec<LevelChange>,
    /// Mean of `changes` (0 when no levels were supplied).
    pub mean_change: f64,
}

/// Relative importance change of a model's top-K features across
/// missingness levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub model: String,
    pub k: usize,
    pub aggregate_mean: f64,
    /// Population standard deviation of the per-feature means.
    pub aggregate_std: f64,
    pub per_feature: Vec<FeatureStability>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Average relative change in importance of the complete report's top-K
/// features.
///
/// For each top-K feature `f` and level `m`,
/// `Δ_f(m) = |I_m(f) - I_0(f)| / I_0(f)`, with `I_m(f) = 0` when `f` is
/// absent from the level report. Each feature's changes are averaged over the
/// levels, and the aggregate is the mean and population standard deviation
/// of those averages over the K features.
pub fn relative_change(
    complete: &ImportanceReport,
    by_level: &BTreeMap<MissingnessLevel, ImportanceReport>,
    k: usize,
) -> Result<StabilityReport, EvaluationError> {
    let top = complete.top_k(k)?;
    let per_feature = top
        .entries()
        .iter()
        .map(|e| {
            if e.importance <= 0.0 {
                return Err(EvaluationError::ZeroBaselineImportance(e.feature.clone()));
            }
            let changes: Vec<LevelChange> = by_level
                .iter()
                .map(|(&level, report)| {
                    let now = report.importance(&e.feature).unwrap_or(0.0);
                    LevelChange {
                        level,
                        change: (now - e.importance).abs() / e.importance,
                    }
                })
                .collect();
            let mean_change = if changes.is_empty() {
                0.0
            } else {
                changes.iter().map(|c| c.change).sum::<f64>() / changes.len() as f64
            };
            Ok(FeatureStability {
                feature: e.feature.clone(),
                baseline: e.importance,
                changes,
                mean_change,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let means: Vec<f64> = per_feature.iter().map(|f| f.mean_change).collect();
    let (aggregate_mean, aggregate_std) = mean_std(&means);
    Ok(StabilityReport {
        model: complete.model_name().to_string(),
        k,
        aggregate_mean,
        aggregate_std,
        per_feature,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapPoint {
    pub level: MissingnessLevel,
    /// Percentage in `[0, 100]`.
    pub overlap: f64,
}

/// Share of the complete data's top-K that survives into each level's top-K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapCurve {
    pub model: String,
    pub k: usize,
    /// Starts with the `(0, 100)` anchor, then one point per level.
    pub points: Vec<OverlapPoint>,
}

/// `100 · |top_K(complete) ∩ top_K(level)| / K` for every level.
pub fn overlap_curve(
    complete: &ImportanceReport,
    by_level: &BTreeMap<MissingnessLevel, ImportanceReport>,
    k: usize,
) -> Result<OverlapCurve, EvaluationError> {
    let reference: HashSet<&str> = complete.top_features(k)?.into_iter().collect();
    let mut points = vec![OverlapPoint {
        level: MissingnessLevel::COMPLETE,
        overlap: 100.0,
    }];
    for (&level, report) in by_level {
        if level.is_complete() {
            continue;
        }
        let shared = report
            .top_features(k)?
            .into_iter()
            .filter(|f| reference.contains(f))
            .count();
        points.push(OverlapPoint {
            level,
            overlap: 100.0 * shared as f64 / k as f64,
        });
    }
    Ok(OverlapCurve {
        model: complete.model_name().to_string(),
        k,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::importance::{ImportanceEntry, ReportError};

    fn report(entries: &[(&str, f64)]) -> ImportanceReport {
        ImportanceReport::new("m", "t", entries.iter().map(|(f, v)| ImportanceEntry::new(*f, *v)).collect()).unwrap()
    }

    fn level(f: f64) -> MissingnessLevel {
        MissingnessLevel::new(f).unwrap()
    }

    #[test]
    fn single_feature_hand_value() {
        let complete = report(&[("a", 0.2), ("b", 0.1)]);
        let by_level = BTreeMap::from([
            (level(0.1), report(&[("a", 0.25), ("b", 0.1)])),
            (level(0.2), report(&[("a", 0.15), ("b", 0.1)])),
            (level(0.3), report(&[("a", 0.2), ("b", 0.1)])),
        ]);
        let s = relative_change(&complete, &by_level, 1).unwrap();
        assert!((s.aggregate_mean - 0.5 / 3.0).abs() < 1e-12);
        assert_eq!(s.aggregate_std, 0.0);
        assert_eq!(s.per_feature[0].changes.len(), 3);
    }

    #[test]
    fn absent_feature_counts_as_full_change() {
        let complete = report(&[("a", 0.4), ("b", 0.1)]);
        let by_level = BTreeMap::from([(level(0.1), report(&[("b", 0.3)]))]);
        let s = relative_change(&complete, &by_level, 1).unwrap();
        assert_eq!(s.per_feature[0].changes[0].change, 1.0);
    }

    #[test]
    fn zero_baseline_and_k_errors() {
        let complete = report(&[("a", 0.4), ("b", 0.0)]);
        assert!(matches!(
            relative_change(&complete, &BTreeMap::new(), 2),
            Err(EvaluationError::ZeroBaselineImportance(f)) if f == "b"
        ));
        assert!(matches!(
            relative_change(&complete, &BTreeMap::new(), 3),
            Err(EvaluationError::Report(ReportError::KTooLarge { .. }))
        ));
    }

    #[test]
    fn no_levels_is_stable() {
        let complete = report(&[("a", 0.4), ("b", 0.1)]);
        let s = relative_change(&complete, &BTreeMap::new(), 2).unwrap();
        assert_eq!((s.aggregate_mean, s.aggregate_std), (0.0, 0.0));
    }

    #[test]
    fn overlap_points() {
        let complete = report(&[("a", 3.0), ("b", 2.0), ("c", 1.0), ("d", 0.5)]);
        let by_level = BTreeMap::from([
            (level(0.1), report(&[("a", 3.0), ("b", 2.0), ("d", 1.0)])),
            (level(0.2), report(&[("d", 3.0), ("c", 2.0), ("a", 1.0)])),
        ]);
        let c = overlap_curve(&complete, &by_level, 2).unwrap();
        let got: Vec<f64> = c.points.iter().map(|p| p.overlap).collect();
        assert_eq!(got, [100.0, 100.0, 0.0]);
        assert_eq!(c.points[0].level, MissingnessLevel::COMPLETE);
        assert!(overlap_curve(&complete, &by_level, 4).is_err());
    }
}
