use thiserror::Error;

#[derive(Debug, Error)]
pub enum AmgError {
    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),

    #[error("zero or missing diagonal entry in row {row}")]
    ZeroDiagonal { row: usize },

    #[error("negative diagonal entry in row {row}")]
    NegativeDiagonal { row: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dense factorization failed: {0}")]
    Factorization(String),

    #[error("operator not SPD: {0}")]
    NotSpd(String),

    #[error("solver breakdown: {0}")]
    Breakdown(String),

    #[error("all columns are linearly dependent")]
    EmptyBasis,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = AmgError> = std::result::Result<T, E>;

impl AmgError {
    pub fn dims(op: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        AmgError::DimensionMismatch {
            op,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
