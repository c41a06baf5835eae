//! Robustness analysis for interpretable binary classifiers.
//!
//! The crate implements a two-category ("Up"/"Down") feature abstraction
//! driven by ROC thresholds, a Naive-Bayes-style classifier over the
//! abstracted records that tolerates missing cells, and an evaluation
//! harness that measures how feature rankings and predictive metrics degrade
//! as values are removed completely at random.
//!
//! The pieces, bottom up:
//!
//! * [`tabular`]: datasets with explicit missing cells, CSV ingestion,
//!   stratification and seeded splits.
//! * [`missingness`]: exact-count MCAR injection.
//! * [`abstraction`]: Youden-optimal thresholds and level partitions.
//! * [`classifier`]: class profiles, scoring and feature significance.
//! * [`importance`]: the ranked report every model exchanges.
//! * [`baselines`]: mean imputation, a Gini random forest and import of
//!   reports written by other tools.
//! * [`evaluation`]: metrics, stability, overlap and the repeated experiment.
//!
//! ```
//! use cactus::abstraction::{apply_abstraction, fit_abstraction};
//! use cactus::classifier::{fit_profiles, significance};
//! use cactus::synthetic::SyntheticCohort;
//!
//! let data = SyntheticCohort::default().generate(7);
//! let model = fit_abstraction(&data)?;
//! let abstracted = apply_abstraction(&model, &data)?;
//! let profiles = fit_profiles(&abstracted, 1.0)?;
//! let ranking = significance(&abstracted)?;
//! assert!(ranking.entries()[0].feature.starts_with("inf_"));
//! assert_eq!(profiles.features().len(), 30);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod abstraction;
pub mod baselines;
pub mod classifier;
pub mod evaluation;
pub mod importance;
pub mod missingness;
pub mod seed;
pub mod synthetic;
pub mod tabular;

pub use abstraction::{AbstractedDataset, AbstractionModel, Category, Direction, FeatureAbstraction};
pub use classifier::{ClassProfiles, Prediction};
pub use importance::{ImportanceEntry, ImportanceReport};
pub use missingness::{InjectionPlan, MissingnessLevel};
pub use tabular::{Dataset, FeatureColumn, FeatureKind};

/// Chapters of the guide in `book/`, compiled here so their snippets run as
/// doc-tests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    pub mod data {}
    #[doc = include_str!("../../../book/src/abstraction.md")]
    pub mod abstraction {}
    #[doc = include_str!("../../../book/src/classifier.md")]
    pub mod classifier {}
    #[doc = include_str!("../../../book/src/missingness.md")]
    pub mod missingness {}
    #[doc = include_str!("../../../book/src/stability.md")]
    pub mod stability {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    pub mod baselines {}
    #[doc = include_str!("../../../book/src/experiment.md")]
    pub mod experiment {}
}
