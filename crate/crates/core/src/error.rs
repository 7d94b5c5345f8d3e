use thiserror::Error;

/// Errors raised by the library. [`Error::kind`] groups them by how a caller
/// is expected to react.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error{}: field `{field}`: {message}", match .line { Some(l) => format!(" at line {l}"), None => String::new() })]
    Parse {
        line: Option<usize>,
        field: String,
        message: String,
    },

    #[error("ill-conditioned intersection; reduce eig_tol or rescale instance (residual {residual:.3e} > {bound:.3e})")]
    IllConditionedIntersection { residual: f64, bound: f64 },

    #[error("numerical contract violated: {0}")]
    Numerical(String),

    #[error("aligned or near-aligned instance; increase cap or tolerance (tail {tail:.3e} after {terms} terms)")]
    TailNotConverged { tail: f64, terms: usize },

    #[error("alpha too small / tol too tight: series needs more than {cap} terms")]
    SeriesCap { cap: usize },

    #[error("model too small for the requested profile; increase K or relax horizon{}", match .smallest_k { Some(k) => format!(" (smallest sufficient K = {k})"), None => String::new() })]
    ModelTooSmall { smallest_k: Option<usize> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// a documented precondition was violated
    Input,
    /// an instance file could not be read
    Parse,
    /// a runtime cross-check or contract failed
    Numerical,
    /// a finite resource (term cap, block count) was exhausted
    Capacity,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::DimensionMismatch { .. } | Error::Input(_) => ErrorKind::Input,
            Error::Parse { .. } => ErrorKind::Parse,
            Error::IllConditionedIntersection { .. } | Error::Numerical(_) => ErrorKind::Numerical,
            Error::TailNotConverged { .. } | Error::SeriesCap { .. } | Error::ModelTooSmall { .. } => {
                ErrorKind::Capacity
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
