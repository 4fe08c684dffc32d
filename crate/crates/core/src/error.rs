use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("leading eigenvalue is nearly degenerate (relative gap {gap:e}); lower beta or increase M")]
    NearDegenerate { gap: f64 },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("auxiliary dimension {dim} exceeds the dense budget {limit}; use M <= {max_m}")]
    OverBudget { dim: usize, limit: usize, max_m: usize },

    #[error("eigenvalue {re:e}{im:+e}i has an imaginary part above the cleanup threshold")]
    ComplexEigenvalue { re: f64, im: f64 },

    #[error("dense eigendecomposition failed")]
    Decomposition,

    #[error("biorthogonal basis is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("enumeration needs more than {budget} states")]
    Budget { budget: usize },

    #[error("nonpositive leading eigenvalue {0:e}")]
    NonPositive(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
