use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parameter `{field}` = {value} is outside its admissible interval {interval}")]
    Parameter {
        field: &'static str,
        value: f64,
        interval: &'static str,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unknown game id `{id}` (valid ids: {valid})")]
    UnknownGame { id: String, valid: String },

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable tag, used in error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::Parameter { .. } => "parameter",
            Error::Dimension(_) => "dimension",
            Error::UnknownGame { .. } => "unknown_game",
            Error::Eigen(_) => "eigen",
            Error::NotApplicable(_) => "not_applicable",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
