use thiserror::Error;

/// Errors raised by the capacity pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QdcError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("matrix is not Hermitian (max |M - M^dag| = {0:.3e})")]
    NotHermitian(f64),
    #[error("density matrix is not positive semidefinite (eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, QdcError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(QdcError::Domain(msg.into()))
}
