use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("numerically singular matrix: pivot {pivot:e} in column {column}")]
    Singular { column: usize, pivot: f64 },

    #[error("non-finite {0} encountered")]
    NonFinite(&'static str),

    #[error("near pole: theta({arg}) has modulus {modulus:e} in {context}")]
    NearPole { arg: Complex64, modulus: f64, context: String },

    #[error("theta series did not converge within {n_max} terms at x = {x}")]
    TruncationNotReached { x: Complex64, n_max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index out of domain: {0}")]
    IndexOutOfDomain(String),

    #[error("degenerate point: {0}")]
    DegeneratePoint(String),

    #[error("no generic sample found after {0} redraws")]
    RedrawsExhausted(usize),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures caused by the sampled point rather than by misuse.
    pub fn is_numerical_domain(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::NonFinite(_)
                | Error::NearPole { .. }
                | Error::TruncationNotReached { .. }
                | Error::DegeneratePoint(_)
                | Error::RedrawsExhausted(_)
        )
    }

    /// Prefixes the context of a near-pole error, leaving other errors unchanged.
    pub fn in_context(self, outer: &str) -> Self {
        match self {
            Error::NearPole { arg, modulus, context } => Error::NearPole { arg, modulus, context: format!("{outer}: {context}") },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
