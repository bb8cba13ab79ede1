use thiserror::Error;

/// Errors raised by algebra, map, state-over-time and inversion routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("shape is not a recorded tensor product")]
    NotTensorShape,

    #[error("element is not hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("negative eigenvalue {value:.3e}")]
    NegativeEigenvalue { value: f64 },

    #[error("element is not faithful (eigenvalue {value:.3e} below tolerance)")]
    NotFaithful { value: f64 },

    #[error("not a density matrix: {0}")]
    NotState(String),

    #[error("map is not trace preserving (defect {defect:.3e})")]
    NotTracePreserving { defect: f64 },

    #[error("map is not completely positive and trace preserving")]
    NotCptp,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("singular: {0}")]
    Singular(String),

    #[error("vanishing denominator at ({k}, {l}): {value:.3e}")]
    SingularDenominator { k: usize, l: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
