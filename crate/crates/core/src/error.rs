use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation (negative money,
    /// non-finite rate, zero staking rate, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of the caller was violated.
    #[error("contract violated: {0}")]
    Contract(String),

    /// A row of an input file could not be parsed or failed validation.
    #[error("line {line}: field `{field}`: {message}")]
    Row { line: u64, field: String, message: String },

    /// The brute-force oracle would exceed its evaluation budget.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("unknown allocation strategy `{name}` (available: {available})")]
    UnknownStrategy { name: String, available: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
