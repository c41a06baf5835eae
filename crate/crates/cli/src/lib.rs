//! Library side of the `cactus` binary: configuration, commands and artifact
//! rendering. `main.rs` only parses flags and maps errors to exit codes.

pub mod commands;
pub mod config;
pub mod error;
pub mod export;

pub use commands::{cmd_baseline_fit, cmd_compare, cmd_heatmap, cmd_report_import, cmd_run, compare_reports};
pub use config::{RunConfig, Settings, Stratum};
pub use error::CliError;
