use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// The variants mirror how callers are expected to react: a `Usage` error is a
/// malformed request, `Contract` and `Precondition` flag inputs outside a
/// routine's domain, and `Numerical` signals an iteration that did not settle.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("contract violation: {what} (residual {residual:.3e})")]
    Contract { what: String, residual: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn contract(what: impl Into<String>, residual: f64) -> Self {
        Error::Contract {
            what: what.into(),
            residual,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
