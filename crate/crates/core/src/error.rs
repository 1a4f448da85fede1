use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A cell of a tabular input violates the dataset schema. `row` is the
    /// 1-based data row (header excluded), `column` the header name.
    #[error("schema error at row {row}, column `{column}`: {message}")]
    Schema {
        row: usize,
        column: String,
        message: String,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn schema(row: usize, column: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            row,
            column: column.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the command-line tool: 1 for input and schema
    /// problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 2,
            _ => 1,
        }
    }
}
