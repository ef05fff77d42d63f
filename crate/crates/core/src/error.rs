use thiserror::Error;

/// Errors raised by the measurement and recovery pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("negative intensity sample {value} at index {index}")]
    NegativeIntensity { index: usize, value: f64 },

    #[error("index {index} outside range [{min}, {max}]")]
    OutOfRange { index: i64, min: i64, max: i64 },

    #[error("overlap condition violated: {0}")]
    OverlapViolation(String),

    #[error("anchor entry too small: |Q[{index},{index}]| = {value:e}")]
    AnchorTooSmall { index: usize, value: f64 },

    #[error("phase link broken entering block {block}: every overlap value is below tolerance")]
    PhaseLinkBreak { block: i64 },

    #[error("start block {block} carries no energy above tolerance")]
    ZeroBlock { block: i64 },

    #[error("insufficient interpolation points: need {needed}, have {available}")]
    InsufficientPoints { needed: usize, available: usize },

    #[error("ill-conditioned reconstruction system: smallest singular value {sigma_min:e}")]
    IllConditioned { sigma_min: f64 },

    #[error("measurement set is not augmented")]
    NotAugmented,

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
