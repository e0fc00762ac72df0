//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("owner algebra mismatch: {0}")]
    OwnerMismatch(String),
    #[error("state is not faithful: {0}")]
    NonFaithfulState(String),
    #[error("invalid spectral data: {0}")]
    InvalidSpectralData(String),
    #[error("seminorm is not metric: {0}")]
    NotMetric(String),
    #[error("automorphism failed verification: {0}")]
    NotAutomorphism(String),
    #[error("inconsistent metric data: {0}")]
    Inconsistency(String),
    #[error("group structure violation: {0}")]
    GroupViolation(String),
    #[error("not a metric table: {0}")]
    NotAMetric(String),
    #[error("cocycle identity violated: {0}")]
    CocycleViolation(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bracket gap too large to certify: {0}")]
    RefinementNeeded(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
