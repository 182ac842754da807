use thiserror::Error;

/// Errors across the table / lattice / instance / marginal pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("capacity budget exceeded: {0}")]
    Capacity(String),

    #[error("inconsistent instance: {0}")]
    InconsistentInstance(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("unsupported zero-pattern: {0}")]
    UnsupportedPattern(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 parse, 3 capacity, 4 inconsistent
    /// instance, 5 numeric, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::InvalidTable(_) => 2,
            Error::Capacity(_) => 3,
            Error::InconsistentInstance(_) => 4,
            Error::Numeric(_) | Error::UnsupportedPattern(_) => 5,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
