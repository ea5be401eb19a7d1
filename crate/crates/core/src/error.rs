use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("sequence is not nonincreasing at index {index}: {prev} < {next}")]
    NotMonotone { index: i64, prev: f64, next: f64 },

    #[error("sequence is not symmetric at index {0}")]
    NotSymmetric(i64),

    #[error("tail sum diverges: {0}")]
    Divergent(String),

    #[error("rearrangement is not computable: {0}")]
    NonComputableRearrangement(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("coefficient at frequency {0} is nonzero but gamma vanishes there")]
    Membership(i64),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("search budget exhausted: {0}")]
    Budget(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("inconsistent truncation: radicand {radicand} below tolerance {tolerance}")]
    InconsistentTruncation { radicand: f64, tolerance: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
