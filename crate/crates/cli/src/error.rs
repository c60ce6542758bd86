use std::io;
use std::path::PathBuf;

use lirkw_core::Error as CoreError;

/// Exit status for a command that ran to completion but whose check failed.
pub const EXIT_CHECK_FAILED: u8 = 1;
/// Exit status for unusable input: unparsable files, unknown names, bad parameters.
pub const EXIT_BAD_INPUT: u8 = 2;
/// Exit status when an integration produced a non-finite state.
pub const EXIT_NONFINITE: u8 = 3;
/// Exit status for other runtime failures: I/O, singular linear systems.
pub const EXIT_RUNTIME: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("writing output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Usage(_) => EXIT_BAD_INPUT,
            CliError::Core(e) => match e.root_cause() {
                CoreError::NonfiniteState { .. } => EXIT_NONFINITE,
                CoreError::SingularFactor { .. } | CoreError::SingularStageSystem => EXIT_RUNTIME,
                _ => EXIT_BAD_INPUT,
            },
            CliError::Io { .. } | CliError::Csv(_) => EXIT_RUNTIME,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
