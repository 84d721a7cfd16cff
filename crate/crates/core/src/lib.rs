//! Asymptotics and numerics for graphical minimal surfaces in hyperbolic
//! upper half-space `{x^m > 0}`.
//!
//! A graph `(y', t) ↦ (y', t, u(y', t))` over the half-ball is minimal iff each
//! component solves `g^{ij}[u] ∂_i∂_j u_s − (n/t) ∂_t u_s = 0` with
//! `g_{ij} = δ_{ij} + Σ_l ∂_i u_l ∂_j u_l`. This crate provides
//!
//! - [`series`]: exact truncated jets and `t`/`log t` series,
//! - [`geometry`]: induced metric, the operator `Q` and the first-variation residuals,
//! - [`expansion`]: the formal boundary-expansion recursion and its structural checks,
//! - [`solver`]: damped Newton on a graded mesh, the rotational ODE and the area functional,
//! - [`fitter`]: coefficient extraction from sampled solutions,
//! - [`envelope`]: distances to the asymptotic boundary and the forbidden-ball envelope.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod envelope;
pub mod expansion;
pub mod fitter;
pub mod geometry;
pub mod linalg;
pub mod math;
pub mod mesh;
pub mod quadrature;
pub mod series;
pub mod solver;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
