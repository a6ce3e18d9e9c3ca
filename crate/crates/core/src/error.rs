use thiserror::Error;

/// Errors raised by the library layers.
///
/// Non-convergence of the regularized index routes is not an error; it is
/// reported inside [`crate::witten::RegularizedEstimate`].
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric: max asymmetry {asymmetry:e} exceeds {tolerance:e}")]
    Asymmetric { asymmetry: f64, tolerance: f64 },

    #[error("invalid matrix shape: {0}")]
    Shape(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("function is not finite at {at}")]
    NonFinite { at: f64 },

    #[error("determinant vanishes at sample {index}")]
    VanishingDeterminant { index: usize },

    #[error("argument jump of {jump:.3} rad between samples {index} and {next}; refine the path", next = index + 1)]
    BranchJump { index: usize, jump: f64 },

    #[error("spectral parameter {z} lies on or too close to the spectrum ({eigenvalue})")]
    OnSpectrum { z: String, eigenvalue: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("resource cap exceeded: N*n = {requested} > {cap}")]
    ResourceCap { requested: usize, cap: usize },

    #[error("profile check failed: {0}")]
    Profile(String),

    #[error("integral tail does not decay ({0})")]
    DivergentTail(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("spectral shift function is not integer-valued at 0: left {left}, right {right}")]
    NotQuantized { left: f64, right: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
