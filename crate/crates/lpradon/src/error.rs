use thiserror::Error;

/// Errors produced by the library. `Config` covers invalid parameters and
/// grid mismatches, `Format` covers malformed files, `Numerical` covers
/// runtime failures of the numerics (non-finite data, quadrature failure).
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),

    #[error("numerical error: {0}")]
    Numerical(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
