use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input carries no usable structure (silence, flat spectrum).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("no calibrated thresholds available: {0}")]
    MissingCalibration(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
