use thiserror::Error;

/// Library-wide error type. The CLI maps each variant to a distinct exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text (Pauli words, sum files, dense files, state specs).
    #[error("parse error: {0}")]
    Parse(String),
    /// Structural failure: subgroup blow-up, Lie-closure blow-up, size guards,
    /// missing data for a requested label.
    #[error("structural error: {0}")]
    Structural(String),
    /// Numerical contract violation: non-Hermitian inputs, probabilities that do
    /// not normalize, residuals above tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
    pub fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
