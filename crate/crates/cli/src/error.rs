use std::path::{Path, PathBuf};

use thiserror::Error;

use cactus::baselines::{ForestError, ImputeError};
use cactus::evaluation::EvaluationError;
use cactus::importance::ReportError;
use cactus::tabular::TabularError;

/// Failures of a CLI command, grouped into classes with stable exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// config = 2, io = 3, data = 4, internal = 5.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Data(_) => 4,
            CliError::Internal(_) => 5,
        }
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub(crate) fn data(e: impl std::fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Loading errors: unreadable files are I/O, everything else is data.
pub(crate) fn from_tabular(path: &Path, e: TabularError) -> CliError {
    match e {
        TabularError::Io(source) => CliError::io(path, source),
        TabularError::Csv(err) if matches!(err.kind(), csv::ErrorKind::Io(_)) => match err.into_kind() {
            csv::ErrorKind::Io(source) => CliError::io(path, source),
            _ => unreachable!(),
        },
        other => CliError::data(other),
    }
}

pub(crate) fn from_report(path: &Path, e: ReportError) -> CliError {
    match e {
        ReportError::Io(source) => CliError::io(path, source),
        other => CliError::Data(format!("{}: {other}", path.display())),
    }
}

impl From<EvaluationError> for CliError {
    fn from(e: EvaluationError) -> Self {
        match e {
            EvaluationError::InvalidConfig(m) => CliError::Config(m),
            other => CliError::data(other),
        }
    }
}

impl From<ForestError> for CliError {
    fn from(e: ForestError) -> Self {
        match e {
            ForestError::InvalidParams(m) => CliError::Config(m),
            other => CliError::data(other),
        }
    }
}

impl From<ImputeError> for CliError {
    fn from(e: ImputeError) -> Self {
        CliError::data(e)
    }
}
