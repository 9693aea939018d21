use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("QR decomposition failed: matrix is rank deficient (|r_jj| = {pivot:e})")]
    DecompositionFailed { pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("length {len} is not a multiple of {block}")]
    NotDivisible { len: usize, block: usize },

    #[error("noise variance must be non-negative, got {0}")]
    NegativeNoiseVariance(f64),

    #[error("target error rate must lie in (0, 0.5], got {0}")]
    InvalidTer(f64),

    #[error("window length must be at least 1")]
    InvalidWindow,

    #[error("exhaustive search over {0} symbol vectors exceeds the 2^20 guard")]
    GuardExceeded(u64),

    #[error("unknown constellation `{0}`")]
    UnknownConstellation(String),

    #[error("unknown clipping mode `{0}`")]
    UnknownMode(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
