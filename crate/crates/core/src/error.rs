use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pair is not primitive: {0}")]
    NotPrimitive(String),
    #[error("zero vector where a nonzero one is required")]
    ZeroVector,
    #[error("undecided at max precision: {0}")]
    Undecided(String),
    #[error("certificate failed: {clause} (step {step})")]
    CertFailed { clause: String, step: usize },
    #[error("convergent table exhausted (need q_n > {0})")]
    TableExhausted(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
