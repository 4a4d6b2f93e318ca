use thiserror::Error;

pub type Result<T, E = PalmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PalmError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid weight vector: {0}")]
    InvalidWeight(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty policy universe")]
    EmptyUniverse,

    #[error("invalid universe: {0}")]
    InvalidUniverse(String),

    #[error("invalid portfolio: {0}")]
    InvalidPortfolio(String),

    #[error("no entry covers grid weight {weight_index}")]
    InfeasibleCover { weight_index: usize },

    #[error("exact cover limited to {limit} entries, got {got}")]
    InstanceTooLarge { limit: usize, got: usize },

    #[error("empty probe set")]
    EmptyProbes,

    #[error("audit failed ({clause}): {detail}")]
    AuditFailure { clause: String, detail: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(PalmError::DimensionMismatch { expected, got })
    }
}
