use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("non-finite residual in block `{block}` at index {index}")]
    NonFinite { block: &'static str, index: usize },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error(
        "Newton iteration did not converge at t = {time_ma:.6} Ma after {iterations} iterations \
         (residual norm {residual_norm:.3e}): {reason}"
    )]
    NonConvergence {
        time_ma: f64,
        iterations: usize,
        residual_norm: f64,
        reason: String,
    },

    #[error("index set is not downward closed: {0:?} is missing a predecessor")]
    NotDownwardClosed(Vec<usize>),

    #[error("point {point:?} lies outside the parameter domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("depth {z} m lies outside the column [{bottom}, {top}] m")]
    OutOfColumn { z: f64, bottom: f64, top: f64 },

    #[error("layer count mismatch: expected {expected} layers, found {found}")]
    LayerCount { expected: usize, found: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("model evaluation failed at {point:?}: {source}")]
    Evaluation {
        point: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
