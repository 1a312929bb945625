use std::path::PathBuf;

/// Location of an inner step: outer iteration, block position, objective position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepLocation {
    pub t: usize,
    pub i: usize,
    pub j: usize,
}

impl std::fmt::Display for StepLocation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(t={}, i={}, j={})", self.t, self.i, self.j)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("frequency vector sums to zero; a cycle needs at least one step")]
    InvalidBudget,
    #[error("frequency entry {index} is negative ({value})")]
    InvalidEntry { index: usize, value: i64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value encountered at {0}")]
    NumericFailure(StepLocation),
    #[error("state error: {0}")]
    State(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),
    #[error("ingestion error in {file}: {message}")]
    Ingestion { file: PathBuf, message: String },
    #[error("schema drift: produced {} feature columns ({}), expected {expected}", columns.len(), columns.join(", "))]
    SchemaDrift { columns: Vec<String>, expected: usize },
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
