use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("node index {index} out of range for a network of {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("family has {count} configurations, above the enumeration cap {cap}")]
    CapExceeded { count: String, cap: u64 },

    #[error("eigenvalue solver did not converge for matrix {matrix}")]
    EigenFailure { matrix: String },

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("{0}")]
    Runtime(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
