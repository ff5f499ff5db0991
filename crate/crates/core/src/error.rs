use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not a prime in [2, 2^31)")]
    NotPrime(u64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("monomial degree {degree} exceeds cap {cap}")]
    DegreeCap { degree: u32, cap: u32 },
    #[error("term count {count} exceeds cap {cap}")]
    TermCap { count: usize, cap: usize },
    #[error("invalid polynomial system: {0}")]
    InvalidSystem(String),
    #[error("system is not degree-2 independent (witness {witness:?})")]
    DependentSystem { witness: Vec<u64> },
    #[error("guard exceeded: {what} needs {needed}, limit {limit}")]
    Guard {
        what: &'static str,
        needed: u128,
        limit: u128,
    },
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("region kind `{0}` cannot certify cube containment")]
    Uncertifiable(&'static str),
    #[error("grid level {0} is not a power of two")]
    NonDyadicLevel(u64),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("empty solution set")]
    EmptySolutionSet,
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn guard(what: &'static str, needed: u128, limit: u128) -> Result<()> {
    if needed > limit {
        Err(Error::Guard {
            what,
            needed,
            limit,
        })
    } else {
        Ok(())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
