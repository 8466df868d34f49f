use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("undecodable image data: {0}")]
    Format(String),

    #[error("label {label} at ({x}, {y}) is outside the taxonomy (C = {num_classes})")]
    Label {
        label: u32,
        x: u32,
        y: u32,
        num_classes: usize,
    },

    #[error("malformed container: {0}")]
    Container(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("codec failure: {0}")]
    Codec(String),

    #[error("malformed mask run-length stream: {0}")]
    Rle(String),

    #[error("external command failed: {0}")]
    External(String),

    #[error("taxonomy error: {0}")]
    Taxonomy(String),

    #[error("invalid masking configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
