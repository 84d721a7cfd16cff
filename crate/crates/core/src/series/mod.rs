//! Exact truncated arithmetic for tangential jets and for series in `t` and `log t`.
//!
//! [`PolyJet`] holds a coefficient function `c(y')` as a truncated polynomial;
//! [`LogSeries`] holds `Σ c_{i,j}(y') t^i (log t)^j`. Both are generic over a
//! [`Scalar`] field, either exact [`Rational`] or `f64`.

mod jet;
mod log_series;
mod scalar;

pub use jet::{Monomial, PolyJet, MAX_DEGREE, MAX_VARS};
pub use log_series::{Axis, LogSeries, VectorLogSeries};
pub use scalar::{rational_to_f64, Rational, Scalar, ScalarMode};

/// Structural failures of the series arithmetic.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeriesError {
    #[error("incompatible jets: (numVars, maxDegree) {left:?} vs {right:?}")]
    IncompatibleJets { left: (usize, u32), right: (usize, u32) },
    #[error("incompatible truncation orders {left} vs {right}")]
    IncompatibleTruncation { left: u32, right: u32 },
    #[error("exponent vector of length {len} for a jet in {num_vars} variables (or exponent out of range)")]
    BadExponent { len: usize, num_vars: usize },
    #[error("tangential axis {axis} out of range for {num_vars} variables")]
    BadAxis { axis: usize, num_vars: usize },
    #[error("constant term is zero; jet is not invertible")]
    ZeroConstantTerm,
    #[error("log power {j} at t^{i} exceeds the configured cap {cap}")]
    LogOverflow { i: u32, j: u32, cap: u32 },
    #[error("log power {j} without a positive power of t")]
    LogWithoutTPower { j: u32 },
    #[error("series evaluated at t = {t}; requires t > 0")]
    Domain { t: f64 },
    #[error("a vector series needs at least one component")]
    EmptyVector,
}
