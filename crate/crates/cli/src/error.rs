use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] capmap_core::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{0} validation check(s) failed")]
    ValidationFailed(usize),
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical-domain problems,
    /// 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Core(capmap_core::Error::Config(_)) => 2,
            CliError::Core(_) => 3,
            CliError::Io { .. } | CliError::ValidationFailed(_) => 1,
        }
    }
}
