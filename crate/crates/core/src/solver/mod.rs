//! Numerical solution of the Dirichlet problem on a graded half-box.

mod energy;
mod newton;
mod ode;
mod refine;

pub use energy::{
    energy, energy_solve, energy_system, energy_unknowns, nodal_masses, normalized_energy_gradient, Energy,
};
pub use newton::{
    apply_boundary, discrete_residual, discrete_system, newton_solve, NewtonConfig, SolveReport, UnknownMap,
};
pub use ode::{ode_solve, rotational_series, rotational_series_exact, rotational_slope, rotational_value, OdeProfile};
pub use refine::{refine_study, restrict, richardson_extrapolate, rotational_refinement, rotational_solve, ConvergenceTable, RefineLevel};

pub use crate::mesh::{Grid, GridField, MeshError, NodeKind};

use alloc::boxed::Box;

use crate::geometry::GeometryError;
use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("linear solve failed: {0}")]
    Linalg(#[from] LinalgError),
    #[error("Newton stagnated at residual {:e} after {} iterations", .0.final_residual, .0.iterations)]
    Stagnation(Box<SolveReport>),
    #[error("Newton hit the iteration limit at residual {:e}", .0.final_residual)]
    MaxIterations(Box<SolveReport>),
    #[error("|K| rⁿ = {value} ≥ 1: the rotational graph does not reach t = r")]
    Domain { value: f64 },
    #[error("quadrature did not converge")]
    Quadrature,
    #[error("t_cut = {t_cut} must be positive and below the top of the grid")]
    TCut { t_cut: f64 },
    #[error("initial field lives on a different grid")]
    GridMismatch,
    #[error("a refinement study needs at least three levels")]
    TooFewLevels,
}
