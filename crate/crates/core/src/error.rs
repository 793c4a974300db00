use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sampling too coarse: {0}")]
    Sampling(String),

    #[error("operation requires a {expected} configuration")]
    WrongSetup { expected: &'static str },

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("no beat detected: {0}")]
    NoBeat(String),

    #[error("invalid scan record: {0}")]
    InvalidRecord(String),

    #[error("{}", config_message(*.line, .message))]
    Config { line: Option<usize>, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

fn config_message(line: Option<usize>, message: &str) -> String {
    match line {
        Some(n) => format!("line {n}: {message}"),
        None => message.to_string(),
    }
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    /// Caller-side problem (bad input or configuration) rather than a
    /// failure while running.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::WrongSetup { .. } | Error::Config { .. }
        )
    }
}
