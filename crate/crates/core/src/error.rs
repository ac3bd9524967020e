use std::path::PathBuf;

/// Errors produced by the toolkit.
///
/// Variants fall into two groups: caller mistakes (`Argument`, `Dimension`,
/// `Partition`, `NoBackground`, `TooLarge`) and data problems (`Format`,
/// `Corrupt`, `Validation`, `Io`). The CLI maps the second group onto a
/// distinct exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("mask has no background pixel; nothing to anchor the completion")]
    NoBackground,

    #[error("region partition violated at pixel ({x}, {y}): {reason}")]
    Partition { x: usize, y: usize, reason: String },

    #[error("system too large for the dense reference solver: {unknowns} unknowns (limit {limit})")]
    TooLarge { unknowns: usize, limit: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("sidecar error on {path}: {source}")]
    Sidecar {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// True for errors caused by the data itself rather than by how the
    /// caller invoked the operation.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Format(_)
                | Error::Corrupt(_)
                | Error::Validation(_)
                | Error::Io { .. }
                | Error::Sidecar { .. }
                | Error::NoBackground
                | Error::Partition { .. }
                | Error::Dimension(_)
                | Error::TooLarge { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
