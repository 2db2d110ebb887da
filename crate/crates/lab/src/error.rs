use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config: `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("numerical failure at {point}: {source}")]
    Numerical {
        point: String,
        #[source]
        source: paoi_core::Error,
    },
    #[error("simulation did not look stationary at {0}")]
    NonStationary(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl LabError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        LabError::Config { key: key.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config { .. } => 2,
            LabError::Numerical { .. } => 3,
            LabError::NonStationary(_) => 4,
            LabError::Io { .. } | LabError::Csv(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
