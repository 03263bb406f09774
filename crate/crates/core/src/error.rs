use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure talking to a generation, answering or classification backend.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum BackendError {
    /// The backend could not be reached. `attempts` counts every try,
    /// including retries.
    #[error("transport error calling {endpoint} after {attempts} attempt(s): {message}")]
    Transport {
        endpoint: String,
        attempts: u32,
        retryable: bool,
        message: String,
    },
    /// The backend answered, but not in the shape the protocol requires.
    #[error("protocol error from {endpoint}: {message}")]
    Protocol { endpoint: String, message: String },
    /// The request itself was rejected before being sent.
    #[error("invalid backend request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error("fallback classifier failed on {question:?}: {source}")]
    Fallback {
        question: String,
        #[source]
        source: BackendError,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("every paragraph failed: {0}")]
    AllParagraphsFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
