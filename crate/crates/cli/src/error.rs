use std::path::PathBuf;

use latentedit_core::Error as CoreError;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const UNEXPECTED: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const LOAD_OR_IO: u8 = 3;
    pub const ABORTED: u8 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Io { .. } => exit::LOAD_OR_IO,
            CliError::Core(e) => match e {
                CoreError::InvalidConfig(_) | CoreError::UnknownAttribute(_) | CoreError::UnknownRegion(_) => {
                    exit::CONFIG
                }
                CoreError::ModelLoad { .. }
                | CoreError::Io { .. }
                | CoreError::Image { .. }
                | CoreError::Checkpoint(_) => exit::LOAD_OR_IO,
                CoreError::NonFinite { .. } => exit::ABORTED,
                _ => exit::UNEXPECTED,
            },
        }
    }
}
