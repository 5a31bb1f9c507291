//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by the smoothing, inference, simulation and I/O layers.
#[derive(Debug, Error)]
pub enum SizerError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The weighted least-squares problem at a pixel is singular: fewer than
    /// two distinct design points carry positive kernel weight.
    #[error("degenerate local fit at location {i0} with bandwidth {h}")]
    DegenerateFit { i0: usize, h: f64 },

    #[error("series too short: n = {n}, need at least {min}")]
    SeriesTooShort { n: usize, min: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("{path}: row {row}: {msg}")]
    Csv { path: String, row: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("map shapes differ: {0}")]
    ShapeMismatch(String),

    /// Every pilot smooth reproduces the data exactly, so the residual
    /// trade-off statistic is undefined.
    #[error("all pilot residuals are zero: the series is fit exactly at every bandwidth")]
    AllResidualsZero,

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, SizerError>;
