use glovenet_tensor::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller passed arguments that can never work.
    #[error("usage: {0}")]
    Usage(String),

    /// On-disk data is missing, truncated, or malformed.
    #[error("format: {0}")]
    Format(String),

    /// Data loaded fine but breaks a dataset or fold invariant.
    #[error("validation: {0}")]
    Validation(String),

    #[error("shape: {0}")]
    Shape(String),

    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error("training diverged: {0}")]
    NonFinite(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
