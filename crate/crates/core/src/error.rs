use thiserror::Error;

/// Errors raised by the configuration model and the execution loop.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DacError {
    /// A space, configuration, policy or schema is malformed or mismatched.
    #[error("configuration error: {0}")]
    Config(String),
    /// An instance payload failed benchmark validation.
    #[error("invalid instance `{id}`: {message}")]
    Instance { id: String, message: String },
    /// The target algorithm produced something unusable during a run.
    #[error("execution fault at step {step}: {message}")]
    Execution { step: usize, message: String },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

pub type Result<T, E = DacError> = std::result::Result<T, E>;

pub(crate) fn config_err(msg: impl Into<String>) -> DacError {
    DacError::Config(msg.into())
}
