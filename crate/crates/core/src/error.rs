use thiserror::Error;

/// Errors raised by the library.
///
/// The variants map onto the CLI exit codes: [`Error::Capability`] is a
/// size/limit problem (exit 2), everything else is a domain or validation
/// problem (exit 1).
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The input is well formed but exceeds an algorithmic limit.
    #[error("capability error: {0}")]
    Capability(String),
    /// A model description failed validation.
    #[error("validation error: {0}")]
    Validation(String),
    /// Malformed input data (JSON or binary).
    #[error("parse error: {0}")]
    Parse(String),
    /// A solver produced a result that violates its own invariants.
    #[error("internal consistency error: {0}")]
    Internal(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable code used on stderr by the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "E_DOMAIN",
            Error::Capability(_) => "E_CAPABILITY",
            Error::Validation(_) => "E_VALIDATION",
            Error::Parse(_) => "E_PARSE",
            Error::Internal(_) => "E_INTERNAL",
            Error::Io(_) => "E_IO",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capability(_) => 2,
            _ => 1,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
