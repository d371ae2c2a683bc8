use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Domain(#[from] DomainError),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

/// Failures raised by a world or a hypothetical policy.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("action {value} outside [{lower}, {upper}]")]
    ActionOutOfRange { value: f64, lower: f64, upper: f64 },

    #[error("unknown ego action index {0}")]
    UnknownEgoAction(usize),

    #[error("no legal ego actions")]
    NoEgoActions,

    #[error("illegal macro: {0}")]
    IllegalMacro(String),

    #[error("expected {expected} other-agent actions, got {got}")]
    JointActionArity { expected: usize, got: usize },

    #[error("behavior state has {got} dimensions, policy expects {expected}")]
    BehaviorArity { expected: usize, got: usize },

    #[error("agent {0} does not exist in this world")]
    UnknownAgent(usize),

    #[error("{0}")]
    Other(String),
}
