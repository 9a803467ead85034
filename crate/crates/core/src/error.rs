use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Every variant maps onto one of four failure classes (see [`ErrorClass`]),
/// which the command-line front end turns into stable exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "wavelength {wavelength_nm:.3} nm outside the table of material '{material}' ({min_nm:.3}..{max_nm:.3} nm)"
    )]
    WavelengthOutOfRange { material: String, wavelength_nm: f64, min_nm: f64, max_nm: f64 },

    #[error("eigensolver did not converge after {iterations} restarts (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("inconsistent measurement: {0}")]
    Inconsistency(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse failure class of an [`Error`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Domain,
    Convergence,
    Inconsistency,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Json(_) => ErrorClass::Config,
            Error::Domain(_) | Error::WavelengthOutOfRange { .. } => ErrorClass::Domain,
            Error::NoConvergence { .. } | Error::Factorization(_) => ErrorClass::Convergence,
            Error::Inconsistency(_) => ErrorClass::Inconsistency,
            Error::Io(_) => ErrorClass::Io,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
