use thiserror::Error;

pub type Result<T> = std::result::Result<T, CiberError>;

#[derive(Debug, Error)]
pub enum CiberError {
    #[error(transparent)]
    Wmi(#[from] wmi_core::Error),
    #[error("architecture: {0}")]
    Architecture(String),
    #[error("data: {0}")]
    Data(String),
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },
    #[error("partition function is zero")]
    ZeroPartition,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CiberError {
    pub fn is_capacity(&self) -> bool {
        matches!(self, CiberError::Wmi(e) if e.is_capacity())
    }
}
