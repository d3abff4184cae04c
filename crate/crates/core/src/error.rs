use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed code: {0}")]
    MalformedCode(String),
    #[error("subtraction would produce a negative dyadic")]
    NegativeResult,
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("model has zero initial capital")]
    ZeroCapital,
    #[error("string is not a member of the extension set")]
    NotMember,
    #[error("rank {rank} out of range for a set of size {size}")]
    RankOutOfRange { rank: u64, size: u64 },
    #[error("round cap {0} exceeded before the target was admitted")]
    RoundCapExceeded(u64),
    #[error("block width {width} exceeds the enumeration budget {budget}")]
    BlockTooWide { width: usize, budget: usize },
    #[error("oracle exhausted: query at index {index}, oracle length {len}")]
    OracleExhausted { index: usize, len: usize },
    #[error("inversion delay exceeded the lookahead of {0} bits")]
    DelayExceeded(usize),
    #[error("output is not in the range of the transducer")]
    Inconsistent,
    #[error("file missing: {0}")]
    FileMissing(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
