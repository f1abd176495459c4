use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid budget: {max_evals} evaluations for dimension {dim}")]
    InvalidBudget { max_evals: u64, dim: usize },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unknown base function `{0}`")]
    UnknownFunction(String),

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("incomplete result matrix: {0}")]
    IncompleteMatrix(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Diagnostics for malformed suite files. Line numbers are 1-based.
#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: unexpected end of file, expected {expected}")]
    Truncated { line: usize, expected: String },

    #[error("line {line}: {field} has {found} values, expected {expected}")]
    DimensionMismatch {
        line: usize,
        field: String,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: invalid {field} `{token}`")]
    InvalidValue {
        line: usize,
        field: String,
        token: String,
    },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}
