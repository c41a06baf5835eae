//! Comparison models for the stability analysis.
//!
//! The in-repo baseline is a random forest with Gini importance. External
//! models (boosting libraries and the like) take part through importance
//! reports on disk; see [`import_external_report`].

mod external;
mod forest;
mod impute;

pub use external::import_external_report;
pub use forest::{
    fit_forest, forest_importance, forest_predict, forest_votes, Forest, ForestError, ForestParams, Node, NodeKind,
    Split, Tree, Vote, MODEL_NAME,
};
pub use impute::{mean_impute, ImputeError};
