use std::path::PathBuf;

use crate::lengthmodel::FitResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid UTF-8 at byte offset {offset}")]
    Decode { offset: usize },

    #[error("malformed record: {0}")]
    MalformedRecord(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },

    #[error("undefined value: {0}")]
    Undefined(String),

    #[error("limit {0} is too small (need at least 10)")]
    LimitTooSmall(usize),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("fit did not converge after {iterations} iterations")]
    FitNotConverged {
        iterations: usize,
        best: Box<FitResult>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("design error: {0}")]
    Design(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }
}
