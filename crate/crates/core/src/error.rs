use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Input that does not conform to the schema it claims to follow.
    #[error("malformed input: {0}")]
    MalformedInput(String),

    /// A parameter outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A predicate the attribute's search control does not support.
    #[error("interface violation: {0}")]
    InterfaceViolation(String),

    /// The session's query budget ran out. Callers treat this as a signal,
    /// not a failure: partial state stays intact on the session.
    #[error("query budget exhausted after {issued} queries")]
    BudgetExhausted { issued: u64 },

    /// An algorithm was pointed at a schema it cannot drive.
    #[error("unsupported interface: {0}")]
    UnsupportedInterface(String),

    /// Schema-level problems during ingestion or config parsing.
    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
