use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unphysical state: {0}")]
    Unphysical(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("invalid channel index {0} (expected 0 or 1)")]
    InvalidChannel(usize),

    #[error("step size too large: {0}")]
    StepTooLarge(String),

    #[error("outcome probability {0:e} too small to condition on")]
    DegenerateConditioning(f64),

    #[error("n = {n} exceeds the enumeration bound {max}")]
    EnumerationBound { n: usize, max: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
