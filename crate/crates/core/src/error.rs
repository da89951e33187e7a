use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("masker parameters do not match the maskable set: {0}")]
    ParameterMismatch(String),

    #[error("sample generation failed after {attempts} attempts")]
    GenerationFailure { attempts: usize },

    #[error("malformed input at line {line}: {message}")]
    Malformed { line: u64, message: String },

    #[error("label {label} out of range at line {line}")]
    LabelOutOfRange { line: u64, label: i64 },

    #[error("leaf denominator is not positive (hessian sum + lambda = {0})")]
    DivisionGuard(f64),

    #[error("label mode mismatch: {0}")]
    LabelModeMismatch(String),

    #[error("cosine distance undefined for a zero-norm vector")]
    ZeroNorm,

    #[error("unlabeled pool has {available} points, at least {required} required")]
    PoolExhausted { available: usize, required: usize },

    #[error("infeasible active-learning configuration: {0}")]
    ConfigInfeasible(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("ROC analysis requires both classes to be present")]
    SingleClass,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
