use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] dpjl::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 usage or invalid parameters, 2 incompatible inputs, 3 infeasible oracle.
    pub fn exit_code(&self) -> u8 {
        use dpjl::Error as E;
        match self {
            CliError::Core(E::IncompatibleSketches { .. } | E::SchemeMismatch(_) | E::DimMismatch { .. }) => 2,
            CliError::Core(E::TooManyConfigs { .. }) => 3,
            _ => 1,
        }
    }
}
