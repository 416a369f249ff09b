use thiserror::Error;

/// Errors raised by the tomography library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ill-posed tomography scheme: {0}")]
    IllPosedScheme(String),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    /// A spectral gradient was requested at a rank-deficient anchor.
    #[error("degenerate linearization anchor: {0}")]
    DegenerateGuess(String),

    #[error("failed to load {context}: {message}")]
    Load { context: String, message: String },

    #[error("{failed} of {total} trials did not converge")]
    TooManyFailures { failed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
