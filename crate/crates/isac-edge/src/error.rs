//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid value for {context}: {value}")]
    InvalidValue { context: &'static str, value: f64 },

    /// The empirical error model a·v^(-b) is undefined below one sample.
    #[error("error model undefined for sample count {0} (< 1)")]
    EmptySamples(f64),

    #[error("curve fit is degenerate: {0}")]
    DegenerateFit(&'static str),

    #[error("oracle not applicable: {0}")]
    OracleNotApplicable(&'static str),

    #[error("malformed SDP: {0}")]
    MalformedSdp(String),

    /// Sensing threshold unreachable under the power budget for one task.
    #[error("task {task} is infeasible: sensing threshold unreachable under the power budget")]
    TaskInfeasible { task: usize },

    /// A solved allocation leaves a task with zero usable samples.
    #[error("task {task} collects no usable sample under the solved allocation")]
    EmptyDataset { task: usize },

    #[error("beamforming optimization failed for task {task}: {detail}")]
    BeamformingFailed { task: usize, detail: String },

    #[error("unknown sweep parameter `{0}` (expected t_s, b, p, t or target_error)")]
    UnknownParameter(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
