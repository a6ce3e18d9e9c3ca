//! Spectral shift functions, Fredholm and Witten indices for the model operator
//! `D_A = d/dt + A(t)` on the real line with finite-dimensional fibers.
//!
//! Layers, bottom up:
//! - [`linalg`]: symmetric eigensolvers, matrix functions, branch-tracked logarithms
//! - [`quad`]: Gauss–Legendre, double-exponential and adaptive Gauss–Kronrod rules
//! - [`ssf`]: spectral shift functions of matrix pairs, perturbation determinants
//! - [`model`]: operator paths, the staggered discretization of `D_A`, regularized indices
//! - [`transforms`]: Pushnitski/Abel-type transforms, Hilbert and Poisson operators
//! - [`rankone`]: rank-one perturbation laboratory
//! - [`witten`]: the three routes to the Witten index and the consolidated report

pub mod error;
pub mod halfint;
pub mod io;
pub mod linalg;
pub mod model;
pub mod quad;
pub mod rankone;
pub mod ssf;
pub mod transforms;
pub mod witten;

pub use error::{Error, Result};
pub use halfint::HalfInt;
