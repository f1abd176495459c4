use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),

    #[error("lookup: {0}")]
    Lookup(String),

    #[error(transparent)]
    Core(#[from] rcmaes_core::Error),

    #[error("i/o on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{failed} of {total} runs failed")]
    PartialFailure { failed: usize, total: usize },
}

impl HarnessError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit status: 2 for a campaign that finished with failed
    /// cells, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::PartialFailure { .. } => 2,
            _ => 1,
        }
    }
}
