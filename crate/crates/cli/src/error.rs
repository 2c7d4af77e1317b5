use std::path::{Path, PathBuf};

use ids_core::mlp::MlpError;
use ids_core::shap::ShapError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] ids_core::Error),
}

impl CliError {
    /// Process exit status: 1 usage or config, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io { .. } => 2,
            CliError::Numeric(_) => 3,
            CliError::Core(e) => match e {
                ids_core::Error::Mlp(MlpError::InvalidConfig { .. }) => 1,
                ids_core::Error::Mlp(MlpError::NonFiniteLoss { .. })
                | ids_core::Error::Shap(ShapError::SingularSystem { .. }) => 3,
                _ => 2,
            },
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

macro_rules! via_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}

via_core!(
    ids_core::dataset::DatasetError,
    ids_core::preprocess::PreprocessError,
    MlpError,
    ids_core::metrics::MetricsError,
    ShapError
);

pub type Result<T> = std::result::Result<T, CliError>;
