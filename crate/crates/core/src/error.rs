use std::io;

/// Errors raised by the simulator, learner and file formats.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value or file is invalid or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    /// A caller broke an operation's precondition (bad action index, width mismatch).
    #[error("contract violation: {0}")]
    Contract(String),
    /// A file could not be parsed or carries an unsupported format version.
    #[error("format error: {0}")]
    Format(String),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(io::Error::other(e))
        } else {
            Error::Format(e.to_string())
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                other => Error::Format(format!("{other:?}")),
            }
        } else {
            Error::Format(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
