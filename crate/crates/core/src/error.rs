use thiserror::Error;

/// Errors raised by every layer of the crate.
///
/// Each variant maps onto one CLI exit code through [`Error::exit_code`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("incomplete graph: missing edges {0}")]
    Completion(String),

    #[error("resource budget exceeded: {0}")]
    Resource(String),

    #[error("unsupported backend: {0}")]
    UnsupportedBackend(String),

    #[error("no admissible insertion at position {position}: {reason}")]
    SelectionFailure { position: usize, reason: String },

    #[error("state error: {0}")]
    State(String),

    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::HypothesisNotMet(_) | Error::SelectionFailure { .. } => 2,
            Error::Resource(_) => 4,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Input(format!("json: {err}"))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
