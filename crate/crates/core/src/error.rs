use thiserror::Error;

use crate::window::BasisTag;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("growth sequence is empty")]
    EmptySequence,
    #[error("growth sequence needs equal numbers of a and b terms (got {a} and {b})")]
    UnbalancedSequence { a: usize, b: usize },
    #[error("interleaved sequence has odd length {0}")]
    OddLength(usize),
    #[error("growth sequence term overflows: {0}")]
    Overflow(&'static str),
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("block index {n} out of range 0..={max}")]
    BlockOutOfRange { n: usize, max: usize },
    #[error("growth sequence is not structurally valid: {0}")]
    InvalidSequence(String),
    #[error("window exceeds configured sequence: index {index} > {max}")]
    WindowExceedsSequence { index: usize, max: usize },
    #[error("modulus {m} does not divide every term (first failure: {term})")]
    Divisibility { m: u64, term: u64 },
    #[error("radicand must be positive")]
    ZeroRadicand,
    #[error("window size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("window basis mismatch: {0} vs {1}")]
    BasisMismatch(BasisTag, BasisTag),
    #[error("entry ({row}, {col}) lies above the diagonal")]
    NotLowerTriangular { row: usize, col: usize },
    #[error("entry ({row}, {col}) lies outside a window of size {size}")]
    OutOfWindow { row: usize, col: usize, size: usize },
    #[error("vector support index {index} outside window of size {size}")]
    SupportOutOfWindow { index: usize, size: usize },
    #[error("cannot parse scalar {text:?}: {reason}")]
    ScalarParse { text: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
