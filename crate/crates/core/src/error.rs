use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecayError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("operation requires a {expected} profile")]
    WrongSupport { expected: &'static str },

    #[error("operation requires a flat profile")]
    WrongModel,

    #[error("evaluation at a pole of the continuation near {0}")]
    Pole(Complex64),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("bound-state bracket exhausted at -{0:e}; enlarge the bracket limit")]
    BracketExhausted(f64),

    #[error("no resonance poles found")]
    EmptyPoleSet,

    #[error("requested |t| = {requested} exceeds the resolvable horizon {horizon} for the panel budget")]
    Resolution { requested: f64, horizon: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("composition error: {0}")]
    Composition(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),
}

pub type Result<T, E = DecayError> = std::result::Result<T, E>;
