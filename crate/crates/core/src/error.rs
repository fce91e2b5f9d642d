use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(
        "eigensolver did not converge after {iterations} restarts (best residual {residual:.3e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("integration diverged at step {step}")]
    Divergence { step: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed header field `{field}`: {message}")]
    Header { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
