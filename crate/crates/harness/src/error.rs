use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] semwire_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no images found under {0}")]
    EmptyCorpus(PathBuf),
    #[error("invalid sweep plan: {0}")]
    Plan(String),
    #[error("{failed} of {total} sweep tasks failed")]
    TooManyFailures { failed: usize, total: usize },
    #[error("plot: {0}")]
    Plot(String),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
