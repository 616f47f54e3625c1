//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor/layer dimension mismatch. `location` names the offending layer or buffer.
    #[error("shape mismatch in {location}: expected {expected}, got {actual}")]
    Shape {
        location: String,
        expected: usize,
        actual: usize,
    },

    /// Invalid configuration value or missing required setting.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Dataset-level problem (missing columns, missing labels, bad sizes).
    #[error("invalid data: {0}")]
    Data(String),

    /// Input outside the mathematical domain of an operation.
    #[error("{0}")]
    Domain(String),

    /// NaN or infinity produced where a finite value is required.
    #[error("non-finite value in {0}")]
    Numeric(String),

    /// Text parse failure with a 1-based line number.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Serialized artifact does not match the expected schema or version.
    #[error("schema error: {0}")]
    Schema(String),

    /// Operation not supported for the given input (e.g. non-2-D model for grids).
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
