//! Crate-wide error type.

use thiserror::Error;

use crate::training::EpochStats;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violated a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested operation is not defined for the given kind.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// A dataset file could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An estimator had nothing to average over.
    #[error("{0}")]
    Undefined(String),

    /// A regression could not be fit (e.g. all x values identical).
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Training produced a non-finite loss; the history up to the failing
    /// epoch is attached for diagnostics.
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize, history: Vec<EpochStats> },

    /// Every grid-search cell failed; one diagnostic line per cell.
    #[error("all grid cells failed:\n{}", diagnostics.join("\n"))]
    GridExhausted { diagnostics: Vec<String> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
