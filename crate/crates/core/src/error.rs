use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("feature norm {norm} exceeds 1")]
    FeatureNorm { norm: f64 },

    #[error("observed cost {0} outside [-1, 1]")]
    CostRange(f64),

    #[error("invalid environment: {0}")]
    InvalidEnv(String),

    #[error("no safe action at step {h}, state {state}")]
    Infeasible { h: usize, state: usize },

    #[error("numerical breakdown: {0}")]
    Numerical(String),

    #[error("kernel matrix is not positive definite (pivot {pivot:e} after jitter)")]
    NotPositiveDefinite { pivot: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("penalty ledger is in {actual} mode, operation requires {expected}")]
    WrongMode {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("brute-force enumeration of {count:e} policies exceeds the cap of {cap:e}")]
    EnumerationCap { count: f64, cap: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
