use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MmError {
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("refused: {0}")]
    Refusal(String),
}

pub type Result<T> = std::result::Result<T, MmError>;

pub(crate) fn invalid_space<T>(msg: impl Into<String>) -> Result<T> {
    Err(MmError::InvalidSpace(msg.into()))
}

pub(crate) fn invalid_param<T>(msg: impl Into<String>) -> Result<T> {
    Err(MmError::InvalidParameter(msg.into()))
}

pub(crate) fn limit<T>(msg: impl Into<String>) -> Result<T> {
    Err(MmError::ResourceLimit(msg.into()))
}
