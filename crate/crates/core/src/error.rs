use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("divergent quantity: {0}")]
    Divergent(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("thinning envelope unavailable on [{start}, {end}]: {reason}")]
    EnvelopeUnavailable { start: f64, end: f64, reason: String },

    #[error("time {time} lies beyond the simulated horizon {horizon}")]
    BeyondHorizon { time: f64, horizon: f64 },

    #[error("genealogy corruption: {0}")]
    Corruption(String),

    #[error("misaligned series: {0}")]
    Misaligned(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("duplicate experiment id `{0}`")]
    DuplicateExperiment(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
