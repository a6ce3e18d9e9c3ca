//! Dense and banded real-symmetric linear algebra plus the small complex layer
//! used for perturbation determinants.

pub mod band;
pub mod complex;
pub mod sym;

pub use band::{tridiagonal_eigenvalues, BandSymMatrix};
pub use complex::{logdet_tracked, unwrap_logs, BranchedLogValue, ComplexMatrix};
pub use sym::{
    count_below, eigh, matrix_function, signed_counts, trace_function, EigenDecomposition, SignedCounts,
    SymMatrix,
};
