//! Classification metrics, importance stability, top-K overlap and the
//! repeated missingness experiment that ties them together.

mod experiment;
mod metrics;
mod stability;

use thiserror::Error;

pub use experiment::{
    mean_report, run_experiment, ExperimentConfig, ExperimentResult, LevelMetrics, ModelResult, RunRecord, RunSeeds,
    Summary,
};
pub use metrics::{confusion, metrics, ConfusionMatrix, MetricSet};
pub use stability::{
    overlap_curve, relative_change, FeatureStability, LevelChange, OverlapCurve, OverlapPoint, StabilityReport,
};

use crate::abstraction::AbstractionError;
use crate::baselines::ForestError;
use crate::classifier::ClassifierError;
use crate::importance::ReportError;
use crate::missingness::MissingnessError;
use crate::tabular::TabularError;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("prediction and truth lengths differ ({pred} vs {truth})")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("no rows to evaluate")]
    Empty,
    #[error("top-K feature `{0}` has zero importance on the complete data")]
    ZeroBaselineImportance(String),
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error(transparent)]
    Missingness(#[from] MissingnessError),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Forest(#[from] ForestError),
}
