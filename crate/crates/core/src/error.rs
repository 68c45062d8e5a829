use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsveError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("too few observations: need at least {need}, got {got}")]
    TooFewObservations { need: usize, got: usize },

    #[error("estimation impossible: {0}")]
    EstimationImpossible(String),

    #[error("optimization failed: {0}")]
    Optimization(String),
}

pub type Result<T> = std::result::Result<T, AsveError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(AsveError::InvalidInput(msg.into()))
}
