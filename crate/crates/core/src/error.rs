use std::path::PathBuf;

/// Errors surfaced by every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },

    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("incompatible checkpoint: {0}")]
    Version(String),

    #[error("corrupt payload: {0}")]
    Corrupt(String),

    /// Training produced a non-finite value; `history_csv` holds the losses so far.
    #[error("training diverged at iteration {iteration}: {cause}")]
    Diverged {
        iteration: u64,
        cause: String,
        history_csv: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_err(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Dimension {
        op,
        detail: detail.into(),
    }
}
