use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{confusion, metrics, ConfusionMatrix, MetricSet};
use super::stability::{overlap_curve, relative_change, OverlapCurve, StabilityReport};
use super::EvaluationError;
use crate::abstraction::{apply_abstraction, fit_abstraction};
use crate::baselines::{self, fit_forest, forest_importance, forest_predict, ForestParams};
use crate::classifier::{self, classify_dataset, fit_profiles, significance};
use crate::importance::{ImportanceEntry, ImportanceReport};
use crate::missingness::{inject_mcar, InjectionPlan, MissingnessLevel};
use crate::seed;
use crate::tabular::{split, Dataset, SplitSpec};

/// Settings of a repeated robustness experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Missingness levels; the complete level is always evaluated.
    pub levels: Vec<MissingnessLevel>,
    pub repeats: usize,
    pub seed: u64,
    /// Laplace smoothing of the class profiles.
    pub alpha: f64,
    /// Size of the top-K set used for stability and overlap.
    pub k: usize,
    /// Holdout share of each stratified split.
    pub test_fraction: f64,
    /// Forest baseline; `None` runs the abstraction classifier alone. The
    /// `seed` field is ignored, forest seeds derive from the master seed.
    pub forest: Option<ForestParams>,
}

impl ExperimentConfig {
    /// Canonical grid 0/10/20/30%, 10 repeats, alpha 1, K 10, 30% holdout.
    pub fn new(seed: u64) -> Self {
        Self {
            levels: MissingnessLevel::canonical_grid(),
            repeats: 10,
            seed,
            alpha: 1.0,
            k: 10,
            test_fraction: 0.3,
            forest: None,
        }
    }

    /// Sorted, de-duplicated levels, always starting at 0.
    pub fn grid(&self) -> Vec<MissingnessLevel> {
        let mut grid = self.levels.clone();
        grid.push(MissingnessLevel::COMPLETE);
        grid.sort();
        grid.dedup();
        grid
    }

    fn validate(&self) -> Result<(), EvaluationError> {
        if self.repeats == 0 {
            return Err(EvaluationError::InvalidConfig("repeats must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(EvaluationError::InvalidConfig("top-k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Seeds used by one (repeat, level) cell of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub split: u64,
    pub injection: u64,
    pub forest: u64,
}

impl RunSeeds {
    /// The split seed depends only on the repeat, so every level of a repeat
    /// shares the same partition of rows.
    pub fn derive(master: u64, repeat: usize, level: MissingnessLevel) -> Self {
        let repeat_seed = seed::derive(master, repeat as u64);
        let level_bits = level.fraction().to_bits();
        Self {
            split: seed::derive(repeat_seed, 0),
            injection: seed::derive(seed::derive(repeat_seed, 1), level_bits),
            forest: seed::derive(seed::derive(repeat_seed, 2), level_bits),
        }
    }
}

/// Mean, population standard deviation and number of repeats where the
/// metric was defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub defined: usize,
}

impl Summary {
    pub fn of(values: &[Option<f64>]) -> Self {
        let xs: Vec<f64> = values.iter().flatten().copied().collect();
        if xs.is_empty() {
            return Summary {
                mean: None,
                std: None,
                defined: 0,
            };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Summary {
            mean: Some(mean),
            std: Some(var.sqrt()),
            defined: xs.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub level: MissingnessLevel,
    /// Keyed by [`MetricSet::NAMES`].
    pub metrics: BTreeMap<String, Summary>,
}

impl LevelMetrics {
    pub fn get(&self, metric: &str) -> Option<&Summary> {
        self.metrics.get(metric)
    }
}

/// One model's evaluation on one (repeat, level) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub repeat: usize,
    pub level: MissingnessLevel,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelResult {
    pub model: String,
    pub metrics: Vec<LevelMetrics>,
    /// Importance averaged over repeats, one report per level in grid order.
    pub mean_reports: Vec<ImportanceReport>,
    pub stability: StabilityReport,
    pub overlap: OverlapCurve,
    pub runs: Vec<RunRecord>,
}

impl ModelResult {
    pub fn metrics_at(&self, level: MissingnessLevel) -> Option<&LevelMetrics> {
        self.metrics.iter().find(|m| m.level == level)
    }

    pub fn report_at(&self, level: MissingnessLevel) -> Option<&ImportanceReport> {
        self.metrics
            .iter()
            .position(|m| m.level == level)
            .map(|i| &self.mean_reports[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub cohort: String,
    pub grid: Vec<MissingnessLevel>,
    pub models: Vec<ModelResult>,
}

impl ExperimentResult {
    pub fn model(&self, name: &str) -> Option<&ModelResult> {
        self.models.iter().find(|m| m.model == name)
    }
}

struct CellOutcome {
    model: &'static str,
    record: RunRecord,
    report: ImportanceReport,
}

fn run_cell(
    d: &Dataset,
    config: &ExperimentConfig,
    repeat: usize,
    level: MissingnessLevel,
) -> Result<Vec<CellOutcome>, EvaluationError> {
    let seeds = RunSeeds::derive(config.seed, repeat, level);
    let injected = inject_mcar(d, &InjectionPlan::new(level, seeds.injection))?;
    let (train, test) = split(&injected, &SplitSpec::new(config.test_fraction, seeds.split, true))?;
    let tag = level.tag(d.name());
    let record = |pred: &[u8]| -> Result<RunRecord, EvaluationError> {
        let cm = confusion(pred, test.target())?;
        Ok(RunRecord {
            repeat,
            level,
            confusion: cm,
            metrics: metrics(&cm),
        })
    };

    let mut out = Vec::with_capacity(2);
    let model = fit_abstraction(&train)?;
    let abstract_train = apply_abstraction(&model, &train)?;
    let profiles = fit_profiles(&abstract_train, config.alpha)?;
    let predictions = classify_dataset(&profiles, &apply_abstraction(&model, &test)?)?;
    let labels: Vec<u8> = predictions.iter().map(|p| p.label).collect();
    out.push(CellOutcome {
        model: classifier::MODEL_NAME,
        record: record(&labels)?,
        report: significance(&abstract_train)?.with_labels(classifier::MODEL_NAME, tag.clone()),
    });

    if let Some(params) = config.forest {
        let params = ForestParams {
            seed: seeds.forest,
            ..params
        };
        let forest = fit_forest(&train, &params)?;
        let labels = forest_predict(&forest, &test)?;
        out.push(CellOutcome {
            model: baselines::MODEL_NAME,
            record: record(&labels)?,
            report: forest_importance(&forest).with_labels(baselines::MODEL_NAME, tag),
        });
    }
    Ok(out)
}

/// Mean importance per feature over repeats; a feature missing from a
/// repeat's report counts as 0 there.
pub fn mean_report(reports: &[&ImportanceReport], model: &str, tag: &str) -> Result<ImportanceReport, EvaluationError> {
    let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
    for r in reports {
        for e in r.entries() {
            *sums.entry(e.feature.as_str()).or_default() += e.importance;
        }
    }
    let n = reports.len().max(1) as f64;
    let entries = sums.into_iter().map(|(f, s)| ImportanceEntry::new(f, s / n)).collect();
    Ok(ImportanceReport::new(model, tag, entries)?)
}

/// Repeated missingness experiment on `d`.
///
/// For every repeat and level: missingness is injected into the whole
/// dataset, the result is split with a stratified holdout, models are fitted
/// on the training part and scored on the test part, and importance reports
/// come from the training part. Metrics are summarised over repeats;
/// stability and overlap compare the repeat-averaged importance at each level
/// with the complete level. Cells run in parallel and are reduced in
/// (repeat, level) order.
pub fn run_experiment(d: &Dataset, config: &ExperimentConfig) -> Result<ExperimentResult, EvaluationError> {
    config.validate()?;
    let grid = config.grid();
    let cells: Vec<(usize, MissingnessLevel)> = (0..config.repeats)
        .flat_map(|r| grid.iter().map(move |&l| (r, l)))
        .collect();
    let outcomes = cells
        .par_iter()
        .map(|&(r, l)| run_cell(d, config, r, l))
        .collect::<Result<Vec<_>, _>>()?;

    let mut by_model: BTreeMap<&'static str, Vec<CellOutcome>> = BTreeMap::new();
    for cell in outcomes {
        for o in cell {
            by_model.entry(o.model).or_default().push(o);
        }
    }
    let mut model_names: Vec<&'static str> = vec![classifier::MODEL_NAME];
    if config.forest.is_some() {
        model_names.push(baselines::MODEL_NAME);
    }

    let mut models = Vec::new();
    for name in model_names {
        let outcomes = by_model.remove(name).unwrap_or_default();
        let mut metrics_out = Vec::new();
        let mut mean_reports = Vec::new();
        for &level in &grid {
            let at_level: Vec<&CellOutcome> = outcomes.iter().filter(|o| o.record.level == level).collect();
            let mut summaries = BTreeMap::new();
            for (i, metric) in MetricSet::NAMES.iter().enumerate() {
                let values: Vec<Option<f64>> = at_level.iter().map(|o| o.record.metrics.values()[i]).collect();
                summaries.insert(metric.to_string(), Summary::of(&values));
            }
            metrics_out.push(LevelMetrics {
                level,
                metrics: summaries,
            });
            let reports: Vec<&ImportanceReport> = at_level.iter().map(|o| &o.report).collect();
            mean_reports.push(mean_report(&reports, name, &level.tag(d.name()))?);
        }
        let complete = &mean_reports[0];
        let by_level: BTreeMap<MissingnessLevel, ImportanceReport> = grid
            .iter()
            .zip(&mean_reports)
            .skip(1)
            .map(|(&l, r)| (l, r.clone()))
            .collect();
        let stability = relative_change(complete, &by_level, config.k)?;
        let overlap = overlap_curve(complete, &by_level, config.k)?;
        models.push(ModelResult {
            model: name.to_string(),
            metrics: metrics_out,
            mean_reports,
            stability,
            overlap,
            runs: outcomes.into_iter().map(|o| o.record).collect(),
        });
    }
    Ok(ExperimentResult {
        cohort: d.name().to_string(),
        grid,
        models,
    })
}
