use thiserror::Error;

/// Errors produced by the benchmarking library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum UrbError {
    #[error("size error: {0}")]
    Size(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("solver did not converge after {iterations} iterations (best bounds [{lower}, {upper}])")]
    NonConvergence { iterations: usize, lower: f64, upper: f64 },

    #[error("enumeration budget exceeded: {needed} sequences > {budget}")]
    BudgetExceeded { needed: f64, budget: f64 },

    #[error("ambiguous spectral split: {count} eigenvalues within {radius} of 1")]
    Ambiguous { count: usize, radius: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
}

impl UrbError {
    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        UrbError::Invariant(msg.into())
    }

    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        UrbError::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = UrbError> = std::result::Result<T, E>;
