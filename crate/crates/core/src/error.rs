use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not unitary: max |U^H U - I| = {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("below compatibility threshold: tan^2(s) = {tan2:.6e} < sigma = {sigma:.6e}")]
    BelowCompatibilityThreshold { tan2: f64, sigma: f64 },

    #[error("infeasible multipartite angle: level {level} would need tan^2 = {tan2:.6e} < 0")]
    InfeasibleLevel { level: usize, tan2: f64 },

    #[error("energy {energy} is not an eigenvalue (indicator {indicator:e})")]
    NotAnEigenvalue { energy: f64, indicator: f64 },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("need at least {needed} eigenfunctions per level, level {level} has {got}")]
    InsufficientEigenfunctions { level: usize, needed: usize, got: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Whether the error stems from the caller's input rather than from a
    /// numerical breakdown.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            Error::NotUnitary { .. }
                | Error::DimensionMismatch { .. }
                | Error::InvalidArgument(_)
                | Error::BelowCompatibilityThreshold { .. }
                | Error::InfeasibleLevel { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
