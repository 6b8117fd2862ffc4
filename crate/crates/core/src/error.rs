//! Error types shared across the crate.
//!
//! Every error classifies itself as either a validation failure (bad input,
//! bad configuration, malformed data) or a numerical failure (a computation
//! that could not be carried out). The CLI maps these onto exit codes.

use thiserror::Error;

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Invalid input, configuration, or data (exit code 2).
    Validation,
    /// Numerical failure with diagnostic (exit code 3).
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("kinematics: {0}")]
    Kinematics(String),

    #[error("ddm: {0}")]
    Ddm(String),

    #[error("grid solver configuration: {0}")]
    GridConfig(String),

    #[error("grid solver: {0}")]
    Grid(String),

    #[error("risk model: {0}")]
    Risk(String),

    #[error("risk model numerical failure: {0}")]
    RiskNumerical(String),

    #[error("calibration: {0}")]
    Calibration(String),

    #[error("baseline model: {0}")]
    Baseline(String),

    #[error("trial data: {0}")]
    TrialData(String),

    #[error("experiment config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Exit-code classification: validation problems vs numerical failures.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Grid(_) | Error::RiskNumerical(_) => ErrorKind::Numerical,
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
