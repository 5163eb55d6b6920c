use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input: no header row")]
    EmptyInput,

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),

    /// `row` is 1-based and counts data rows (the header is row 0).
    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("column `{column}` is {actual}, expected {expected}")]
    KindMismatch {
        column: String,
        expected: &'static str,
        actual: &'static str,
    },

    #[error("column length mismatch: `{column}` has {len} entries, expected {expected}")]
    LengthMismatch {
        column: String,
        len: usize,
        expected: usize,
    },

    #[error("invalid extent: {0}")]
    InvalidExtent(String),

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("index {index} out of range for {row_count} rows")]
    OutOfRange { index: i64, row_count: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("selection is empty")]
    EmptySelection,

    #[error("view `{0}` is not a member of the group")]
    UnknownView(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("truncated frame: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },

    #[error("encoding limit exceeded: {0}")]
    EncodingLimit(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
