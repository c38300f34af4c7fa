//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric input was NaN or infinite.
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    /// A parameter or configuration value violates its documented range.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A monotone-time contract was violated (clock ran backwards).
    #[error("time regression: t={t} is earlier than the previous update at t={last}")]
    TimeRegression { t: f64, last: f64 },

    /// A perception frame failed validation.
    #[error("malformed frame: {0}")]
    MalformedFrame(String),

    /// The simulation produced a non-finite state variable and was aborted.
    #[error("simulation aborted at tick {tick} (t={t}): non-finite {variable}")]
    SimAbort {
        tick: usize,
        t: f64,
        variable: &'static str,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParams(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
