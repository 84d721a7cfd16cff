//! Dense and sparse linear algebra shared by the geometry, solver and fitter.

pub mod dense;
pub mod sparse;

pub use dense::{cholesky, cholesky_inverse, cholesky_solve, svd, Lu, Svd};
pub use sparse::{dot, gmres, norm2, norm_inf, BandedLu, Csr, CsrBuilder, Ilu0, IterativeStats};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is singular (pivot {pivot})")]
    Singular { pivot: usize },
    #[error("iteration did not converge")]
    NoConvergence,
    #[error("incompatible matrix shape")]
    Shape,
}
