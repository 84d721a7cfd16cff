//! Pointwise numeric metric, `Q` and first-variation densities.
//!
//! Gradients are `n × k` row-major (`du[i * k + l] = ∂_i u_l`, last row `∂_t`);
//! scaled Hessians are `k` blocks of `n × n` with entries `t² ∂_i∂_j u_l`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::linalg::{cholesky, cholesky_inverse};

use super::GeometryError;

/// Metric data at one point of the graph.
#[derive(Clone, Debug, PartialEq)]
pub struct PointMetric {
    pub n: usize,
    pub g: Vec<f64>,
    pub g_inv: Vec<f64>,
    pub sqrt_det_g: f64,
    /// `t^{−n} √det g`.
    pub area_integrand: f64,
}

impl PointMetric {
    /// `g = I + Du Duᵀ`, inverted and its determinant taken through Cholesky.
    pub fn from_gradient(du: &[f64], n: usize, k: usize, t: f64) -> Result<Self, GeometryError> {
        if du.len() != n * k {
            return Err(GeometryError::Shape);
        }
        if du.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if !(t > 0.0) {
            return Err(GeometryError::DegeneratePoint { t });
        }
        let g = metric_matrix(du, n, k);
        let l = cholesky(&g, n).map_err(|_| GeometryError::SingularMetric)?;
        let sqrt_det_g: f64 = (0..n).map(|i| l[i * n + i]).product();
        let g_inv = cholesky_inverse(&l, n);
        Ok(PointMetric {
            n,
            g,
            g_inv,
            sqrt_det_g,
            area_integrand: sqrt_det_g / math::powi(t, n as i32),
        })
    }
}

/// `δ_ij + Σ_l ∂_i u_l ∂_j u_l`.
pub fn metric_matrix(du: &[f64], n: usize, k: usize) -> Vec<f64> {
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = if i == j { 1.0 } else { 0.0 };
            for l in 0..k {
                s += du[i * k + l] * du[j * k + l];
            }
            g[i * n + j] = s;
            g[j * n + i] = s;
        }
    }
    g
}

/// `t² g^{ij} u_{s,ij} − n t u_{s,t}` for each component.
pub fn scaled_q(pm: &PointMetric, du: &[f64], hess: &[f64], k: usize, t: f64) -> Vec<f64> {
    let n = pm.n;
    (0..k)
        .map(|s| {
            let h = &hess[s * n * n..(s + 1) * n * n];
            let mut acc = 0.0;
            for p in 0..n * n {
                acc += pm.g_inv[p] * h[p];
            }
            acc - (n as f64) * t * du[(n - 1) * k + s]
        })
        .collect()
}

/// First-variation densities multiplied by `t^{n+2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationDensity {
    /// `t^{n+2} ∂_i(t^{−n} √g g^{iα})` for tangential `α`.
    pub tangential: Vec<f64>,
    /// `t^{n+2} [∂_i(t^{−n} √g g^{in}) + n t^{−n−1} √g]`.
    pub normal: f64,
    /// `t^{n+2} ∂_i(t^{−n} √g g^{ij} u_{s,j})` per component.
    pub system: Vec<f64>,
}

/// Evaluates the three divergence expressions by the chain rule, with the
/// derivative of `t^{−n}` taken exactly.
pub fn variation_density(
    du: &[f64],
    hess: &[f64],
    n: usize,
    k: usize,
    t: f64,
) -> Result<VariationDensity, GeometryError> {
    let pm = PointMetric::from_gradient(du, n, k, t)?;
    let f = pm.sqrt_det_g;
    let gi = &pm.g_inv;
    let mut a = vec![0.0; n];
    let mut dg = vec![0.0; n * n];
    let mut tmp = vec![0.0; n * n];
    for i in 0..n {
        // dg = t² ∂_i g.
        for p in 0..n {
            for q in 0..n {
                let mut s = 0.0;
                for l in 0..k {
                    let hl = &hess[l * n * n..(l + 1) * n * n];
                    s += hl[p * n + i] * du[q * k + l] + du[p * k + l] * hl[q * n + i];
                }
                dg[p * n + q] = s;
            }
        }
        let mut trace = 0.0;
        for p in 0..n * n {
            trace += gi[p] * dg[p];
        }
        // tmp = G dg
        for p in 0..n {
            for q in 0..n {
                tmp[p * n + q] = (0..n).map(|r| gi[p * n + r] * dg[r * n + q]).sum();
            }
        }
        // Column contributions: A^j += f [½ tr · G_{ij} − (G dg G)_{ij}].
        for j in 0..n {
            let gdgg: f64 = (0..n).map(|r| tmp[i * n + r] * gi[r * n + j]).sum();
            a[j] += f * (0.5 * trace * gi[i * n + j] - gdgg);
        }
    }
    let nt = n as f64 * t;
    let last = n - 1;
    let tangential = (0..last).map(|al| a[al] - nt * f * gi[last * n + al]).collect();
    let normal = a[last] - nt * f * gi[last * n + last] + nt * f;
    let system = (0..k)
        .map(|s| {
            let h = &hess[s * n * n..(s + 1) * n * n];
            let mut v = 0.0;
            for j in 0..n {
                v += a[j] * du[j * k + s];
                v -= nt * f * gi[last * n + j] * du[j * k + s];
            }
            for p in 0..n * n {
                v += f * gi[p] * h[p];
            }
            v
        })
        .collect();
    Ok(VariationDensity { tangential, normal, system })
}
