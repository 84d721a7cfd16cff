//! Damped Newton iteration on the discrete scaled system.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::geometry::{scaled_q, PointMetric};
use crate::linalg::{gmres, norm_inf, BandedLu, Csr, CsrBuilder, Ilu0};
use crate::mesh::{Grid, GridField, NodeKind};

use super::SolverError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct NewtonConfig {
    /// Target for the max-norm of the scaled residual at interior nodes.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations without a new best residual before giving up.
    pub stagnation_window: usize,
    pub armijo: f64,
    pub max_halvings: u32,
    pub linear_rtol: f64,
    /// Banded LU is used while its work estimate stays below this.
    pub direct_cost_limit: f64,
    pub gmres_restart: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol: 1e-11,
            max_iter: 40,
            stagnation_window: 6,
            armijo: 1e-4,
            max_halvings: 30,
            linear_rtol: 1e-12,
            direct_cost_limit: 2e8,
            gmres_restart: 80,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase")]
pub struct SolveReport {
    pub iterations: usize,
    /// Max-norm residual before each step and after the last one.
    pub residual_history: Vec<f64>,
    /// Step halvings per iteration.
    pub damping_steps: Vec<u32>,
    pub final_residual: f64,
    pub converged: bool,
    /// GMRES iterations per step; zero for direct solves.
    pub linear_iterations: Vec<usize>,
}

/// Position of each node among the unknowns, or `None` for Dirichlet nodes.
#[derive(Clone, Debug)]
pub struct UnknownMap {
    pub nodes: Vec<usize>,
    pub index: Vec<Option<usize>>,
}

impl UnknownMap {
    pub fn interior(grid: &Grid) -> Self {
        Self::from_nodes(grid, grid.interior_nodes())
    }

    pub fn from_nodes(grid: &Grid, nodes: Vec<usize>) -> Self {
        let mut index = vec![None; grid.num_nodes()];
        for (p, &q) in nodes.iter().enumerate() {
            index[q] = Some(p);
        }
        UnknownMap { nodes, index }
    }
}

/// Scaled residual and its analytic Jacobian with respect to interior values.
///
/// With `W = g⁻¹ Du`, `∂R_s/∂(Du)_{ml} = −2 (g⁻¹ H_s W)_{ml} − n t δ_{m,t} δ_{ls}`
/// and `∂R_s/∂H_{s,ij} = g^{ij}`, chained through the stencils.
pub fn discrete_system(u: &GridField, map: &UnknownMap) -> Result<(Vec<f64>, Csr), SolverError> {
    let g = &u.grid;
    let (n, k) = (g.n, g.codim);
    let dim = map.nodes.len() * k;
    let mut res = Vec::with_capacity(dim);
    let mut b = CsrBuilder::new(dim);
    let mut m_s = vec![0.0; n * k];
    let mut gh = vec![0.0; n * n];
    for &q in &map.nodes {
        let st = g.stencils(q);
        let (du, hess) = u.derivatives(&st);
        let t = g.t(g.split(q).1);
        let pm = PointMetric::from_gradient(&du, n, k, t)?;
        let gi = &pm.g_inv;
        res.extend(scaled_q(&pm, &du, &hess, k, t));
        let mut w = vec![0.0; n * k];
        for i in 0..n {
            for l in 0..k {
                w[i * k + l] = (0..n).map(|p| gi[i * n + p] * du[p * k + l]).sum();
            }
        }
        for s in 0..k {
            let h = &hess[s * n * n..(s + 1) * n * n];
            for i in 0..n {
                for j in 0..n {
                    gh[i * n + j] = (0..n).map(|p| gi[i * n + p] * h[p * n + j]).sum();
                }
            }
            for m in 0..n {
                for l in 0..k {
                    m_s[m * k + l] = (0..n).map(|p| gh[m * n + p] * w[p * k + l]).sum();
                }
            }
            for m in 0..n {
                for l in 0..k {
                    let mut a = -2.0 * m_s[m * k + l];
                    if m == n - 1 && l == s {
                        a -= n as f64 * t;
                    }
                    for &(node, wt) in &st.grad[m] {
                        if let Some(c) = map.index[node] {
                            b.push(c * k + l, a * wt);
                        }
                    }
                }
            }
            for (p, stp) in st.hess.iter().enumerate() {
                let gij = gi[p];
                for &(node, wt) in stp {
                    if let Some(c) = map.index[node] {
                        b.push(c * k + s, gij * wt);
                    }
                }
            }
            b.end_row();
        }
    }
    Ok((res, b.finish()))
}

/// Residual only.
pub fn discrete_residual(u: &GridField, map: &UnknownMap) -> Result<Vec<f64>, SolverError> {
    let g = &u.grid;
    let (n, k) = (g.n, g.codim);
    let mut out = Vec::with_capacity(map.nodes.len() * k);
    for &q in &map.nodes {
        let (du, hess) = u.derivatives(&g.stencils(q));
        let t = g.t(g.split(q).1);
        let pm = PointMetric::from_gradient(&du, n, k, t)?;
        out.extend(scaled_q(&pm, &du, &hess, k, t));
    }
    Ok(out)
}

/// Solves `A x = b` directly when the band is narrow enough, else by
/// ILU(0)-preconditioned GMRES. Returns the GMRES iteration count.
pub(crate) fn linear_solve(a: &Csr, b: &[f64], cfg: &NewtonConfig) -> Result<(Vec<f64>, usize), SolverError> {
    if BandedLu::cost_estimate(a) <= cfg.direct_cost_limit {
        let lu = BandedLu::factor(a)?;
        return Ok((lu.solve(b), 0));
    }
    let pre = Ilu0::new(a)?;
    let mut x = vec![0.0; b.len()];
    let stats = gmres(a, b, &mut x, &pre, cfg.linear_rtol, cfg.gmres_restart, 20 * cfg.gmres_restart)?;
    Ok((x, stats.iterations))
}

/// Fills bottom nodes with `phi(y')` and top/lateral nodes with `closure(y', t)`.
pub fn apply_boundary(
    u: &mut GridField,
    phi: &dyn Fn(&[f64]) -> Vec<f64>,
    closure: &dyn Fn(&[f64], f64) -> Vec<f64>,
) {
    let grid = u.grid.clone();
    let k = grid.codim;
    for tang in 0..grid.tangential_count() {
        let y = grid.y_of(tang);
        for j in 0..=grid.nt {
            let q = grid.node(tang, j);
            match grid.kind(q) {
                NodeKind::Bottom => u.at_mut(q).copy_from_slice(&phi(&y)[..k]),
                NodeKind::Top | NodeKind::Lateral => u.at_mut(q).copy_from_slice(&closure(&y, grid.t(j))[..k]),
                NodeKind::Interior => {}
            }
        }
    }
}

/// Damped Newton for the Dirichlet problem: `u = φ` at `t = 0`, `u = closure`
/// on the top and lateral faces.
///
/// Without `init` the start is `φ(y') + (t/r)² (closure(y', r) − φ(y'))`, which
/// matches the `O(t²)` departure from `φ` and the top data.
pub fn newton_solve(
    grid: &Grid,
    phi: &dyn Fn(&[f64]) -> Vec<f64>,
    closure: &dyn Fn(&[f64], f64) -> Vec<f64>,
    init: Option<&GridField>,
    cfg: &NewtonConfig,
) -> Result<(GridField, SolveReport), SolverError> {
    let mut u = match init {
        Some(f) => {
            if f.grid != *grid {
                return Err(SolverError::GridMismatch);
            }
            f.clone()
        }
        None => GridField::from_fn(grid.clone(), |y, t| {
            let w = (t / grid.r) * (t / grid.r);
            phi(y)
                .iter()
                .zip(closure(y, grid.r))
                .map(|(a, b)| a + w * (b - a))
                .collect()
        }),
    };
    apply_boundary(&mut u, phi, closure);
    let map = UnknownMap::interior(grid);
    newton_loop(u, &map, cfg, |f| discrete_system(f, &map), |f| discrete_residual(f, &map))
}

/// Generic damped Newton over the unknowns in `map`; `system` yields residual
/// and Jacobian, `residual` the residual alone.
pub(crate) fn newton_loop(
    mut u: GridField,
    map: &UnknownMap,
    cfg: &NewtonConfig,
    mut system: impl FnMut(&GridField) -> Result<(Vec<f64>, Csr), SolverError>,
    mut residual: impl FnMut(&GridField) -> Result<Vec<f64>, SolverError>,
) -> Result<(GridField, SolveReport), SolverError> {
    let k = u.grid.codim;
    let mut report = SolveReport::default();
    let mut best = f64::INFINITY;
    let mut since_best = 0usize;
    loop {
        let (f, jac) = system(&u)?;
        let norm = norm_inf(&f);
        report.residual_history.push(norm);
        report.final_residual = norm;
        if norm <= cfg.tol {
            report.converged = true;
            return Ok((u, report));
        }
        if norm < best {
            best = norm;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.stagnation_window {
                return Err(SolverError::Stagnation(Box::new(report)));
            }
        }
        if report.iterations >= cfg.max_iter {
            return Err(SolverError::MaxIterations(Box::new(report)));
        }
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let (delta, lin_its) = linear_solve(&jac, &rhs, cfg)?;
        report.linear_iterations.push(lin_its);
        let mut lambda = 1.0;
        let mut halvings = 0u32;
        let accepted = loop {
            let mut trial = u.clone();
            for (p, &q) in map.nodes.iter().enumerate() {
                for s in 0..k {
                    trial.values[q * k + s] += lambda * delta[p * k + s];
                }
            }
            let ok = match residual(&trial) {
                Ok(r) => {
                    let tn = norm_inf(&r);
                    tn.is_finite() && tn <= (1.0 - cfg.armijo * lambda) * norm
                }
                Err(_) => false,
            };
            if ok {
                break Some(trial);
            }
            if halvings >= cfg.max_halvings {
                break None;
            }
            lambda *= 0.5;
            halvings += 1;
        };
        report.damping_steps.push(halvings);
        report.iterations += 1;
        match accepted {
            Some(t) => u = t,
            None => return Err(SolverError::Stagnation(Box::new(report))),
        }
    }
}
