use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Core(#[from] partsketch_core::Error),

    #[error("unknown session `{0}`")]
    UnknownSession(String),

    #[error("gallery token `{given}` is stale (current: {current:?})")]
    StaleGallery {
        given: String,
        current: Option<String>,
    },

    #[error("part `{0}` is not in the current gallery")]
    NotInGallery(String),

    #[error("gallery has no entry {0}")]
    UnknownEntry(usize),

    #[error("invalid request: {0}")]
    Invalid(String),

    #[error("nothing has been placed yet")]
    EmptyAssembly,

    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    /// HTTP status code for the error.
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::Core(e) if !e.is_user_error() => 500,
            ServiceError::Core(partsketch_core::Error::Io { .. }) | ServiceError::Internal(_) => {
                500
            }
            ServiceError::Core(_) | ServiceError::Invalid(_) | ServiceError::NotInGallery(_) => 400,
            ServiceError::UnknownSession(_) | ServiceError::UnknownEntry(_) => 404,
            ServiceError::StaleGallery { .. } | ServiceError::EmptyAssembly => 409,
        }
    }
}

pub type ServiceResult<T> = Result<T, ServiceError>;
