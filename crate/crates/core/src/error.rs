use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty range: no primes below {0}")]
    EmptyRange(u64),
    #[error("invalid progression: gcd({k}, {l}) must be 1 and 1 <= l <= k")]
    InvalidProgression { k: u64, l: u64 },
    #[error("{value} is outside the table range [{lo}, {hi}]")]
    OutOfRange { value: u64, lo: u64, hi: u64 },
    #[error("invalid range [{lo}, {hi}]: {reason}")]
    InvalidRange {
        lo: u64,
        hi: u64,
        reason: &'static str,
    },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("expression error at offset {offset}: {message}")]
    Expression { offset: usize, message: String },
    #[error("progression has no members up to n")]
    EmptyDomain,
    #[error("moment order {order} exceeds the limit {limit}")]
    OrderLimit { order: usize, limit: usize },
    #[error("degenerate distribution: {0}")]
    Degenerate(&'static str),
    #[error("prime cache: {0}")]
    Cache(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
