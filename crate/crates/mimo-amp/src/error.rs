use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad user input: invalid configuration, unsupported combination, parse failure.
    #[error("invalid argument: {0}")]
    Invalid(String),
    /// A numerical procedure failed to converge or produced non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Invalid(format!("JSON serialization failed: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
