use thiserror::Error;

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("missing or invalid credentials")]
    Unauthorized,
    #[error("not permitted: {0}")]
    Forbidden(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("round incomplete: {pending} assigned pair(s) still pending")]
    RoundIncomplete { pending: usize },
    #[error(transparent)]
    Core(#[from] semchange_core::Error),
    #[error("storage: {0}")]
    Storage(#[from] std::io::Error),
    #[error("corrupt log {path} at line {line}: {msg}")]
    CorruptLog { path: String, line: usize, msg: String },
}

impl ServiceError {
    /// Stable machine-readable error code used in API responses.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::Invalid(_) => "invalid",
            ServiceError::Unauthorized => "unauthorized",
            ServiceError::Forbidden(_) => "forbidden",
            ServiceError::NotFound(_) => "not_found",
            ServiceError::Conflict(_) => "conflict",
            ServiceError::RoundIncomplete { .. } => "round_incomplete",
            ServiceError::Core(_) => "invalid",
            ServiceError::Storage(_) | ServiceError::CorruptLog { .. } => "storage",
        }
    }
}
