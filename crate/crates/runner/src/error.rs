use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: kuramoto_core::Error,
    },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("series {0:?} is empty or ragged")]
    Series(String),
    #[error("output directory {0} is locked by another run")]
    Locked(String),
}

impl RunError {
    pub fn is_config(&self) -> bool {
        matches!(self, RunError::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, RunError>;
