use thiserror::Error;

#[derive(Debug, Error)]
pub enum FsmfError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index ({row}, {col}) out of range for a {rows}x{cols} mask")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("duplicate support entry ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("rank {k} out of range (at most {max})")]
    RankOutOfRange { k: usize, max: usize },

    #[error("support of column {column} outside the complete classes is not rectangular ({} entries)", indices.len())]
    NonRectangularOutsideSupport {
        column: usize,
        indices: Vec<(usize, usize)>,
    },

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("certificate mismatch: {0}")]
    CertificateMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FsmfError>;
