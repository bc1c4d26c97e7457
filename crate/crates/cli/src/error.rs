use std::path::PathBuf;

use thiserror::Error;

/// Command failure, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, arguments or input files.
    #[error("{0}")]
    Validation(String),

    #[error("{message}; last good checkpoint: {}", checkpoint.display())]
    Diverged { message: String, checkpoint: PathBuf },

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Diverged { .. } => 3,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<seqlab::Error> for CliError {
    fn from(e: seqlab::Error) -> Self {
        use seqlab::Error as E;
        match e {
            E::InvalidInput(_) | E::InvalidAction(_) | E::InvalidConfig(_) | E::Parse { .. } | E::DuplicateVariant { .. } => {
                CliError::Validation(e.to_string())
            }
            E::Diverged { .. } | E::Io { .. } => CliError::Runtime(e.to_string()),
        }
    }
}
