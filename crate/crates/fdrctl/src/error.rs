//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("p-value vector has {actual} entries, hypothesis space has {expected}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("unknown hypothesis id `{0}`")]
    UnknownHypothesis(String),

    #[error("duplicate hypothesis id `{0}`")]
    DuplicateHypothesis(String),

    #[error("volume weight of `{label}` must be positive and finite, got {value}")]
    InvalidVolumeWeight { label: String, value: f64 },

    #[error("weight of `{label}` must lie in [0, 1], got {value}")]
    InvalidWeight { label: String, value: f64 },

    #[error("p-value at index {index} must lie in [0, 1], got {value}")]
    InvalidPValue { index: usize, value: f64 },

    #[error("level alpha must lie in (0, 1), got {0}")]
    InvalidLevel(f64),

    #[error("step-up-down order {lambda} outside [0, {total}]")]
    InvalidOrder { lambda: f64, total: f64 },

    #[error("{0} requires the standard volume weighting (every lambda equal to 1)")]
    NonStandardVolume(&'static str),

    #[error("prior distribution: {0}")]
    InvalidPrior(String),

    #[error("shape function: {0}")]
    InvalidShape(String),

    #[error("dependence model: {0}")]
    InvalidModel(String),

    #[error("invalid spec `{spec}`: {reason}")]
    InvalidSpec { spec: String, reason: String },

    #[error("experiment grid cell {cell}: {reason}")]
    InvalidGridCell { cell: String, reason: String },

    #[error("conditioning event `p_h <= {u}` hit by {hits} samples, need at least {min}")]
    InsufficientConditioning { u: f64, hits: u64, min: u64 },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("csv input: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
