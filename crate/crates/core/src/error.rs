use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} = {requested} exceeds the configured cap of {cap}")]
    ResourceLimit {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("invariant drift at t = {t}: {what} = {value:e} (limit {limit:e})")]
    InvariantDrift {
        t: f64,
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("moment bound violated at t = {t}: {what} = {value} outside [{lo}, {hi}]")]
    BoundViolation {
        t: f64,
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("closure rule cannot reduce {0}")]
    Closure(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("series error: {0}")]
    Series(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
