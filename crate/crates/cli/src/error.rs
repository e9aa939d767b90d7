use std::path::PathBuf;

use dicke_vrs::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("fit did not converge after {0} iterations")]
    FitNotConverged(usize),

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// 2 for bad arguments or input, 3 for numerical failure, 4 for an
    /// unidentifiable fit.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } | CliError::Input { .. } | CliError::Io { .. } => 2,
            CliError::FitNotConverged(_) => 3,
            CliError::Core(e) => match e {
                CoreError::NotConverged { .. }
                | CoreError::CutoffNotConverged { .. }
                | CoreError::IllConditionedGap { .. }
                | CoreError::ImaginaryResidue(_)
                | CoreError::UncertaintyViolation { .. }
                | CoreError::NonHermitian
                | CoreError::AllPointsFailed(_) => 3,
                CoreError::Unidentifiable => 4,
                _ => 2,
            },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
