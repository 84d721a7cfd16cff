//! Mesh-refinement studies.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math;
use crate::mesh::{Grid, GridField};

use super::newton::{newton_solve, NewtonConfig, SolveReport};
use super::ode::rotational_value;
use super::SolverError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RefineLevel {
    pub nt: usize,
    pub h: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConvergenceTable {
    pub levels: Vec<RefineLevel>,
    /// Least-squares slope of `log error` against `log h`; `None` when exact.
    pub order: Option<f64>,
    /// All errors at rounding level.
    pub exact: bool,
    pub monotone: bool,
}

/// Runs `solve_level(J)` for each normal resolution and fits the order.
pub fn refine_study<F>(levels: &[usize], mut solve_level: F) -> Result<ConvergenceTable, SolverError>
where
    F: FnMut(usize) -> Result<f64, SolverError>,
{
    if levels.len() < 3 {
        return Err(SolverError::TooFewLevels);
    }
    let mut out = Vec::with_capacity(levels.len());
    for &nt in levels {
        out.push(RefineLevel { nt, h: 1.0 / nt as f64, error: solve_level(nt)? });
    }
    let exact = out.iter().all(|l| l.error <= 1e-12);
    let monotone = out.windows(2).all(|w| w[1].error <= w[0].error);
    let order = if exact {
        None
    } else {
        let pts: Vec<(f64, f64)> = out.iter().map(|l| (math::ln(l.h), math::ln(l.error.max(1e-300)))).collect();
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        Some(sxy / sxx)
    };
    Ok(ConvergenceTable { levels: out, order, exact, monotone })
}

fn nested(fine: &Grid, coarse: &Grid) -> bool {
    fine.n == coarse.n
        && fine.codim == coarse.codim
        && fine.rho == coarse.rho
        && fine.r == coarse.r
        && fine.gamma == coarse.gamma
        && fine.nt == 2 * coarse.nt
        && (fine.ny == 2 * coarse.ny - 1 || fine.ny == coarse.ny)
}

/// Injection of a field onto the nodes of a grid it refines. The fine grid
/// halves the normal spacing and either halves the tangential spacing or keeps it.
pub fn restrict(fine: &GridField, coarse: &Grid) -> Result<GridField, SolverError> {
    let gf = &fine.grid;
    if !nested(gf, coarse) {
        return Err(SolverError::GridMismatch);
    }
    let step = if gf.ny == coarse.ny { 1 } else { 2 };
    let mut out = GridField::zeros(coarse.clone());
    for tang in 0..coarse.tangential_count() {
        let fine_tang: usize = coarse
            .tang_multi(tang)
            .iter()
            .enumerate()
            .map(|(a, &i)| step * i * gf.ny.pow(a as u32))
            .sum();
        for j in 0..=coarse.nt {
            let q = coarse.node(tang, j);
            out.at_mut(q).copy_from_slice(fine.at(gf.node(fine_tang, 2 * j)));
        }
    }
    Ok(out)
}

/// Richardson combination `(2^p u_h − u_{2h}) / (2^p − 1)` on the coarse nodes.
pub fn richardson_extrapolate(fine: &GridField, coarse: &GridField, order: f64) -> Result<GridField, SolverError> {
    let mut out = restrict(fine, &coarse.grid)?;
    let w = math::powf(2.0, order);
    for (o, &c) in out.values.iter_mut().zip(&coarse.values) {
        *o = (w * *o - c) / (w - 1.0);
    }
    Ok(out)
}

/// Solution of the rotational problem on one grid with exact boundary data,
/// together with its max nodal error against the quadrature profile.
pub fn rotational_solve(
    grid: &Grid,
    slope: f64,
    cfg: &NewtonConfig,
) -> Result<(GridField, SolveReport, f64), SolverError> {
    let n = grid.n;
    let k = grid.codim;
    let t_nodes = grid.t_nodes();
    let exact = super::ode::ode_solve(n, slope, grid.r, &t_nodes)?;
    let profile = exact.u.clone();
    let closure = |_: &[f64], t: f64| -> Vec<f64> {
        let v = rotational_value(n, slope, t).unwrap_or(f64::NAN);
        core::iter::repeat_n(v, k).collect()
    };
    let phi = |_: &[f64]| alloc::vec![0.0; k];
    let (u, rep) = newton_solve(grid, &phi, &closure, None, cfg)?;
    let mut err: f64 = 0.0;
    for q in grid.interior_nodes() {
        let j = grid.split(q).1;
        for s in 0..k {
            err = err.max((u.values[q * k + s] - profile[j]).abs());
        }
    }
    Ok((u, rep, err))
}

/// [`refine_study`] of [`rotational_solve`] over normal resolutions `levels`.
pub fn rotational_refinement(
    n: usize,
    slope: f64,
    r: f64,
    ny: usize,
    levels: &[usize],
    cfg: &NewtonConfig,
) -> Result<ConvergenceTable, SolverError> {
    refine_study(levels, |nt| {
        let grid = Grid::new(n, 1, 0.5, ny, r, nt, 2.0)?;
        rotational_solve(&grid, slope, cfg).map(|v| v.2)
    })
}
