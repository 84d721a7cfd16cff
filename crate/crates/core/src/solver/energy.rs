//! Discrete area functional `E[u] = Σ_e w_e √det(I + Du_e Du_eᵀ)` over Kuhn
//! simplices of the cells with `t ≥ t_cut`, where `w_e = ∫_e t^{−n}`.
//!
//! On a Kuhn simplex the coordinate stepped `p`-th (of `n`) is distributed like
//! the `(n+1−p)`-th order statistic of `n` uniforms, so `w_e` is a one-dimensional
//! Beta-weighted integral, done by Gauss–Legendre.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math;
use crate::linalg::{cholesky, cholesky_inverse, Csr, CsrBuilder};
use crate::mesh::{Grid, GridField};
use crate::quadrature::gauss_legendre;

use super::newton::{newton_loop, NewtonConfig, SolveReport, UnknownMap};
use super::SolverError;

const GL_POINTS: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Energy {
    pub value: f64,
    /// `∂E/∂u`, node-major with `k` entries per node.
    pub gradient: Vec<f64>,
}

/// Cells and simplices of the truncated domain.
struct Complex {
    /// Permutations of the `n` axes (last axis is `t`).
    perms: Vec<Vec<usize>>,
    /// First normal cell index kept.
    j0: usize,
    /// `w[(j − j0) * n + p]` for a simplex in normal cell `j` with `t` stepped at position `p`.
    weights: Vec<f64>,
    hy: f64,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

fn ln_beta(a: f64, b: f64) -> f64 {
    // Integer arguments only.
    let lf = |m: f64| (1..m as usize).map(|v| math::ln(v as f64)).sum::<f64>();
    lf(a) + lf(b) - lf(a + b)
}

fn cut_index(grid: &Grid, t_cut: f64) -> Result<usize, SolverError> {
    if !(t_cut > 0.0) {
        return Err(SolverError::TCut { t_cut });
    }
    (0..grid.nt)
        .find(|&j| grid.t(j) >= t_cut * (1.0 - 1e-12))
        .ok_or(SolverError::TCut { t_cut })
}

impl Complex {
    fn new(grid: &Grid, t_cut: f64) -> Result<Self, SolverError> {
        let n = grid.n;
        let j0 = cut_index(grid, t_cut)?;
        let hy = grid.hy();
        let (x, w) = gauss_legendre(GL_POINTS);
        let nfact: f64 = (1..=n).map(|v| v as f64).product();
        let mut weights = Vec::with_capacity((grid.nt - j0) * n);
        for j in j0..grid.nt {
            let (t0, t1) = (grid.t(j), grid.t(j + 1));
            let ht = t1 - t0;
            let vol = math::powi(hy, n as i32 - 1) * ht / nfact;
            for p in 0..n {
                let (a, b) = ((n - p) as f64, (p + 1) as f64);
                let lb = ln_beta(a, b);
                let mut acc = 0.0;
                for (xi, wi) in x.iter().zip(&w) {
                    let s = 0.5 * (xi + 1.0);
                    let dens = math::exp((a - 1.0) * math::ln(s) + (b - 1.0) * math::ln(1.0 - s) - lb);
                    acc += 0.5 * wi * dens * math::powi(t0 + ht * s, -(n as i32));
                }
                weights.push(vol * acc);
            }
        }
        Ok(Complex { perms: permutations(n), j0, weights, hy })
    }

    /// Runs `f(vertices, steps, weight)` over every simplex; `steps[i]` is the
    /// axis stepped between vertex `i` and `i + 1`, with its length.
    fn for_each(&self, grid: &Grid, mut f: impl FnMut(&[usize], &[(usize, f64)], f64)) {
        let n = grid.n;
        let cells_per_axis = grid.ny - 1;
        let ncell_tan = cells_per_axis.pow(n as u32 - 1);
        let mut verts = vec![0usize; n + 1];
        let mut steps = vec![(0usize, 0.0); n];
        for ct in 0..ncell_tan {
            let mut rest = ct;
            let mut tang = 0;
            for a in 0..n - 1 {
                tang += (rest % cells_per_axis) * grid.ny.pow(a as u32);
                rest /= cells_per_axis;
            }
            for j in self.j0..grid.nt {
                let ht = grid.t(j + 1) - grid.t(j);
                for perm in &self.perms {
                    let mut node = grid.node(tang, j);
                    verts[0] = node;
                    let mut pos_t = 0;
                    for (i, &ax) in perm.iter().enumerate() {
                        if ax == n - 1 {
                            node += 1;
                            pos_t = i;
                            steps[i] = (ax, ht);
                        } else {
                            node += grid.stride(ax);
                            steps[i] = (ax, self.hy);
                        }
                        verts[i + 1] = node;
                    }
                    f(&verts, &steps, self.weights[(j - self.j0) * n + pos_t]);
                }
            }
        }
    }
}

/// Simplex gradient `J` (`n × k`), `f = √det(I + J Jᵀ)`, `g⁻¹` and `W = g⁻¹ J`.
fn simplex_state(
    u: &GridField,
    verts: &[usize],
    steps: &[(usize, f64)],
) -> Result<(Vec<f64>, f64, Vec<f64>, Vec<f64>), SolverError> {
    let n = u.grid.n;
    let k = u.grid.codim;
    let mut jm = vec![0.0; n * k];
    for (i, &(ax, h)) in steps.iter().enumerate() {
        for l in 0..k {
            jm[ax * k + l] = (u.values[verts[i + 1] * k + l] - u.values[verts[i] * k + l]) / h;
        }
    }
    let g = crate::geometry::metric_matrix(&jm, n, k);
    let lch = cholesky(&g, n).map_err(|_| SolverError::Geometry(crate::geometry::GeometryError::SingularMetric))?;
    let f: f64 = (0..n).map(|i| lch[i * n + i]).product();
    let gi = cholesky_inverse(&lch, n);
    let mut w = vec![0.0; n * k];
    for i in 0..n {
        for l in 0..k {
            w[i * k + l] = (0..n).map(|p| gi[i * n + p] * jm[p * k + l]).sum();
        }
    }
    Ok((jm, f, gi, w))
}

/// Value and exact gradient of the discrete area over cells with `t ≥ t_cut`.
pub fn energy(u: &GridField, t_cut: f64) -> Result<Energy, SolverError> {
    let grid = &u.grid;
    let k = grid.codim;
    let cx = Complex::new(grid, t_cut)?;
    let mut value = 0.0;
    let mut gradient = vec![0.0; u.values.len()];
    let mut err = None;
    cx.for_each(grid, |verts, steps, we| {
        if err.is_some() {
            return;
        }
        match simplex_state(u, verts, steps) {
            Ok((_, f, _, w)) => {
                value += we * f;
                for (i, &(ax, h)) in steps.iter().enumerate() {
                    for l in 0..k {
                        let c = we * f * w[ax * k + l] / h;
                        gradient[verts[i + 1] * k + l] += c;
                        gradient[verts[i] * k + l] -= c;
                    }
                }
            }
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(Energy { value, gradient }),
    }
}

/// Gradient restricted to `map` and the Hessian
/// `∂²f/∂J_{il}∂J_{pq} = f [W_{il}W_{pq} − W_{iq}W_{pl} + g^{ip}(δ_{ql} − (JᵀW)_{ql})]`
/// chained through the simplex differences.
pub fn energy_system(u: &GridField, t_cut: f64, map: &UnknownMap) -> Result<(Vec<f64>, Csr), SolverError> {
    let grid = &u.grid;
    let (n, k) = (grid.n, grid.codim);
    let cx = Complex::new(grid, t_cut)?;
    let dim = map.nodes.len() * k;
    let mut grad = vec![0.0; dim];
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
    let mut err = None;
    cx.for_each(grid, |verts, steps, we| {
        if err.is_some() {
            return;
        }
        let (jm, f, gi, w) = match simplex_state(u, verts, steps) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        // JᵀW, k × k.
        let mut jtw = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                jtw[a * k + b] = (0..n).map(|i| jm[i * k + a] * w[i * k + b]).sum();
            }
        }
        // Derivative of J_{ax, l} w.r.t. node values: +1/h at verts[i+1], −1/h at verts[i].
        let d = |i: usize| -> [(usize, f64); 2] {
            let h = steps[i].1;
            [(verts[i + 1], 1.0 / h), (verts[i], -1.0 / h)]
        };
        for (i1, &(a1, _)) in steps.iter().enumerate() {
            for l1 in 0..k {
                for &(node1, s1) in &d(i1) {
                    let Some(r1) = map.index[node1] else { continue };
                    let row = r1 * k + l1;
                    grad[row] += we * f * w[a1 * k + l1] * s1;
                    for (i2, &(a2, _)) in steps.iter().enumerate() {
                        for l2 in 0..k {
                            let delta = if l1 == l2 { 1.0 } else { 0.0 };
                            let hf = f
                                * (w[a1 * k + l1] * w[a2 * k + l2] - w[a1 * k + l2] * w[a2 * k + l1]
                                    + gi[a1 * n + a2] * (delta - jtw[l2 * k + l1]));
                            for &(node2, s2) in &d(i2) {
                                if let Some(r2) = map.index[node2] {
                                    rows[row].push((r2 * k + l2, we * hf * s1 * s2));
                                }
                            }
                        }
                    }
                }
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let mut b = CsrBuilder::new(dim);
    for row in rows {
        for (c, v) in row {
            b.push(c, v);
        }
        b.end_row();
    }
    Ok((grad, b.finish()))
}

/// Euclidean nodal masses `Σ_{e ∋ q} |e| / (n + 1)` over the truncated domain.
pub fn nodal_masses(grid: &Grid, t_cut: f64) -> Result<Vec<f64>, SolverError> {
    let cx = Complex::new(grid, t_cut)?;
    let mut m = vec![0.0; grid.num_nodes()];
    let n = grid.n;
    let nfact: f64 = (1..=n).map(|v| v as f64).product();
    cx.for_each(grid, |verts, steps, _| {
        let vol: f64 = steps.iter().map(|s| s.1).product::<f64>() / nfact;
        for &v in verts {
            m[v] += vol / (n + 1) as f64;
        }
    });
    Ok(m)
}

/// Nodes whose every adjacent cell lies in the truncated domain and that are not
/// on the boundary.
pub fn energy_unknowns(grid: &Grid, t_cut: f64) -> Result<UnknownMap, SolverError> {
    let j0 = cut_index(grid, t_cut)?;
    let nodes = grid
        .interior_nodes()
        .into_iter()
        .filter(|&q| grid.split(q).1 > j0)
        .collect();
    Ok(UnknownMap::from_nodes(grid, nodes))
}

/// `−t^{n+2} ∂E/∂u_q / m_q` at the unknowns of [`energy_unknowns`]: a discrete
/// analogue of the scaled divergence `t^{n+2} ∂_i(t^{−n} √g g^{ij} u_{s,j})`.
pub fn normalized_energy_gradient(u: &GridField, t_cut: f64) -> Result<Vec<f64>, SolverError> {
    let grid = &u.grid;
    let k = grid.codim;
    let e = energy(u, t_cut)?;
    let m = nodal_masses(grid, t_cut)?;
    let map = energy_unknowns(grid, t_cut)?;
    let mut out = Vec::with_capacity(map.nodes.len() * k);
    for &q in &map.nodes {
        let tq = grid.t(grid.split(q).1);
        let scale = math::powi(tq, grid.n as i32 + 2) / m[q];
        for s in 0..k {
            out.push(-scale * e.gradient[q * k + s]);
        }
    }
    Ok(out)
}

/// Newton on `∇E = 0` over [`energy_unknowns`], all other values held at `init`;
/// convergence is measured on [`normalized_energy_gradient`].
pub fn energy_solve(init: &GridField, t_cut: f64, cfg: &NewtonConfig) -> Result<(GridField, SolveReport), SolverError> {
    let grid = init.grid.clone();
    let map = energy_unknowns(&grid, t_cut)?;
    let masses = nodal_masses(&grid, t_cut)?;
    let k = grid.codim;
    let scales: Vec<f64> = map
        .nodes
        .iter()
        .flat_map(|&q| {
            let tq = grid.t(grid.split(q).1);
            let s = -math::powi(tq, grid.n as i32 + 2) / masses[q];
            core::iter::repeat_n(s, k)
        })
        .collect();
    // Row scaling keeps the Newton step unchanged and makes the residual the
    // normalized gradient.
    let scaled = |f: &GridField| -> Result<(Vec<f64>, Csr), SolverError> {
        let (mut g, mut h) = energy_system(f, t_cut, &map)?;
        for (r, s) in scales.iter().enumerate() {
            g[r] *= s;
            for v in &mut h.vals[h.row_ptr[r]..h.row_ptr[r + 1]] {
                *v *= s;
            }
        }
        Ok((g, h))
    };
    newton_loop(init.clone(), &map, cfg, scaled, |f| scaled(f).map(|v| v.0))
}
