use thiserror::Error;

/// Failure modes surfaced by the numerical operations.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature could not reach the requested consistency.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    /// A requested time does not coincide with a node of the simulation grid.
    #[error("time {0} is not aligned with the simulation grid")]
    Misaligned(f64),

    /// The simulated state left the configured overflow guard.
    #[error("state overflow at step {step}: |x| = {value:.3e} exceeds bound {bound:.3e}")]
    Blowup { step: usize, value: f64, bound: f64 },

    /// Covariance factorization failed beyond the clipping fallback.
    #[error("covariance factorization failed: {0}")]
    Factorization(String),

    /// Not enough samples or grid points to run the estimator.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// An operation requiring a sign-symmetric frequency grid got an asymmetric one.
    #[error("spectral grid is not symmetric: {0}")]
    AsymmetricGrid(String),

    /// The Picard iteration failed to contract even at the smallest window size.
    #[error("Picard iteration failed to contract: {0}")]
    NoContraction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
