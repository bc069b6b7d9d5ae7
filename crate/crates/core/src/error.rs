use thiserror::Error;

#[derive(Debug, Error)]
pub enum GsgiError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid dimensions: {0}")]
    Dimensions(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("action applied to a terminal state")]
    TerminalState,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("{what} exceeds budget: estimated {estimate}, budget {budget}")]
    Budget { what: String, estimate: u64, budget: u64 },
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, GsgiError>;
