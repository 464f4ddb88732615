use semnet_core::ErrorCategory;
use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] semnet_core::Error),

    #[error("{context}: {source}")]
    Run {
        context: String,
        #[source]
        source: semnet_core::Error,
    },

    #[error("invalid configuration file: {0}")]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("measurement error: {0}")]
    Measurement(String),
}

impl HarnessError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            HarnessError::Core(e) | HarnessError::Run { source: e, .. } => e.category(),
            HarnessError::Toml(_) | HarnessError::Config(_) => ErrorCategory::Config,
            HarnessError::Csv(_) | HarnessError::Io(_) => ErrorCategory::Io,
            HarnessError::Measurement(_) => ErrorCategory::Measurement,
        }
    }
}
