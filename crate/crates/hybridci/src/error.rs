//! Toolkit-wide error type.

use crate::trainers::TrainReport;

/// Errors surfaced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input violated an operation precondition (dimensions, ranges, non-finite values).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A text file failed to parse; row and column are 1-based.
    #[error("parse error at row {row}, column {col}: {message}")]
    Parse {
        row: usize,
        col: usize,
        message: String,
    },

    /// A split specification produced an empty partition for a nonzero fraction.
    #[error("invalid split: {0}")]
    InvalidSplit(String),

    /// A trajectory or iteration escaped the representable range.
    #[error("numeric blowup: {0}")]
    NumericBlowup(String),

    /// Training lost finiteness; the report carries the last finite network.
    #[error("training diverged after {} epochs", .0.epochs_run)]
    TrainingDiverged(Box<TrainReport>),

    /// Configuration was structurally valid JSON but semantically wrong.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
