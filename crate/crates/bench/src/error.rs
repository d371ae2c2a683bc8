use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid configuration:\n{0}")]
    Config(String),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
    #[error(transparent)]
    Core(#[from] rsbg_core::Error),
    #[error("malformed results file: {0}")]
    Results(String),
}

impl BenchError {
    /// Process exit code: 1 for configuration problems, 3 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Config(_) => 1,
            _ => 3,
        }
    }
}

impl From<rsbg_core::DomainError> for BenchError {
    fn from(e: rsbg_core::DomainError) -> Self {
        BenchError::Core(e.into())
    }
}
