use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("point outside sensor field of view")]
    OutOfFov,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("scenario validation failed: {0}")]
    Scenario(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("episode log error: {0}")]
    Log(String),

    #[error("replay mismatch at tick {tick}: {field}")]
    ReplayMismatch { tick: u64, field: String },

    #[error("training aborted: {0}")]
    Training(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
