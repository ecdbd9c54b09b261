use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user configuration. `field` is a dotted path into the config.
    #[error("invalid config: {field}: {message}")]
    Config { field: String, message: String },

    #[error("grid too large: need ~{required_bytes} bytes, budget is {budget_bytes} bytes")]
    Resource {
        required_bytes: u64,
        budget_bytes: u64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported evaluation: {0}")]
    UnsupportedEvaluation(String),

    #[error("unsupported dimension {0}: operation is only defined for d = 2")]
    UnsupportedDimension(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
