//! Error taxonomy mapped to process exit codes: input/parse problems (2),
//! pipeline failures (3), evaluation preconditions (4).

use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_PARSE: i32 = 2;
pub const EXIT_PIPELINE: i32 = 3;
pub const EXIT_EVAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    InvalidInput { path: PathBuf, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("frame {frame}: {message}")]
    Pipeline { frame: usize, message: String },
    #[error("feature baseline failed at the {stage} stage on pair {pair}: {message}")]
    BaselineFailure {
        stage: &'static str,
        pair: usize,
        message: String,
    },
    #[error("evaluation requires {path} (run `aeromosaic simulate` to produce it)")]
    EvalRequiresTruth { path: PathBuf },
}

impl CliError {
    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn invalid(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::InvalidInput {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::InvalidInput { .. } | CliError::Io { .. } => {
                EXIT_PARSE
            }
            CliError::Pipeline { .. } | CliError::BaselineFailure { .. } => EXIT_PIPELINE,
            CliError::EvalRequiresTruth { .. } => EXIT_EVAL,
        }
    }
}
