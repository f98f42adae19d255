//! Error types.

use thiserror::Error;

/// Errors from sparse-matrix construction and factorization.
#[derive(Debug, Error)]
pub enum SparseError {
    #[error("entry ({row}, {col}) out of range for dimension {n}")]
    IndexOutOfRange { row: usize, col: usize, n: usize },

    #[error("conflicting symmetric values at ({row}, {col}): {lower} vs {upper}")]
    AsymmetricValue {
        row: usize,
        col: usize,
        lower: f64,
        upper: f64,
    },

    #[error("duplicate index {index} in sparse vector")]
    DuplicateIndex { index: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite (pivot in column {column})")]
    NotPositiveDefinite { column: usize },

    #[error("indefinite downdate (pivot in column {column} driven non-positive)")]
    IndefiniteDowndate { column: usize },

    #[error("row modification of row {column} failed: {reason}")]
    RowModifyFailed { column: usize, reason: String },

    #[error("entry outside the frozen factor pattern at ({row}, {col})")]
    OutsidePattern { row: usize, col: usize },

    #[error("MatrixMarket parse error at line {line}: {msg}")]
    MatrixMarket { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SparseError {
    pub(crate) fn matrix_market(line: usize, msg: impl Into<String>) -> Self {
        SparseError::MatrixMarket {
            line,
            msg: msg.into(),
        }
    }
}

/// Errors from the EP layer.
#[derive(Debug, Error)]
pub enum EpError {
    #[error("EP state is not converged after {sweeps} sweeps; gradients require a fixed point")]
    NotConverged { sweeps: usize },

    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Errors from dataset ingestion.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("row {row}, column {col}: cannot parse '{value}' as a number")]
    NonNumeric {
        row: usize,
        col: usize,
        value: String,
    },

    #[error("row {row}: expected {expected} columns, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}: label {value} is not in {{-1, +1}} or {{0, 1}}")]
    InvalidLabel { row: usize, value: f64 },

    #[error("dataset is empty")]
    Empty,

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors from configuration and model files.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Malformed { line: usize, text: String },

    #[error("key '{key}': {msg}")]
    BadValue { key: String, msg: String },

    #[error("unknown key '{key}'")]
    UnknownKey { key: String },

    #[error("model file: {0}")]
    ModelFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
