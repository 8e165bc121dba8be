use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value failed validation. `path` names the offending
    /// field (e.g. `schedule.support[1].probability`).
    #[error("invalid configuration at `{path}`: {reason}")]
    Config { path: String, reason: String },

    /// An operation was called outside its domain.
    #[error("usage error: {0}")]
    Usage(String),

    /// A bound was requested with parameters that violate its hypotheses.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code: 1 for validation-type failures, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 2,
            _ => 1,
        }
    }
}
