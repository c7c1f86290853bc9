use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// Configuration file or field rejected; the message names the key.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] irsbeam_core::Error),
    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, SimError>;
