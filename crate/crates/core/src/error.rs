use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A malformed row in a play CSV, with its 1-based line number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("vector length {actual} does not match the {expected} lineups of the space")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("unsupported space J({n},{k}): {reason}")]
    UnsupportedSpace { n: usize, k: usize, reason: String },
    #[error("success function is identically zero")]
    ZeroFunction,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("missing CSV column `{0}`")]
    MissingColumn(String),
    #[error("{} malformed row(s); first: {}", .0.len(), .0[0])]
    MalformedRows(Vec<RowError>),
    #[error("unknown player `{0}`")]
    UnknownPlayer(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
