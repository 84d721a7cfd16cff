//! The `y'`-independent reduction `t² u''/(1 + u'²) − n t u' = 0`, whose first
//! integral is `u'/√(1 + u'²) = K tⁿ`, i.e. `u' = K tⁿ / √(1 − K² t^{2n})`.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math;
use crate::quadrature::integrate;
use crate::series::{Rational, Scalar};

use super::SolverError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OdeProfile {
    pub n: usize,
    pub slope: f64,
    pub r: f64,
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    /// Exact `u'` at the mesh nodes.
    pub du: Vec<f64>,
    /// Leading series terms `(power, coefficient)`.
    pub series: Vec<(u32, f64)>,
}

/// `u'` of the rotational profile.
pub fn rotational_slope(n: usize, k: f64, t: f64) -> f64 {
    let tn = math::powi(t, n as i32);
    k * tn / math::sqrt(1.0 - k * k * tn * tn)
}

fn check_domain(n: usize, k: f64, r: f64) -> Result<(), SolverError> {
    let v = k.abs() * math::powi(r, n as i32);
    if !(v < 1.0) || !r.is_finite() {
        return Err(SolverError::Domain { value: v });
    }
    Ok(())
}

fn piece(n: usize, k: f64, a: f64, b: f64) -> Result<f64, SolverError> {
    integrate(|z| rotational_slope(n, k, z), a, b, 1e-17, 1e-14)
        .map(|v| v.0)
        .map_err(|_| SolverError::Quadrature)
}

/// `u(t) = ∫₀ᵗ K ζⁿ (1 − K² ζ^{2n})^{−1/2} dζ` by adaptive quadrature.
pub fn rotational_value(n: usize, k: f64, t: f64) -> Result<f64, SolverError> {
    check_domain(n, k, t)?;
    if k == 0.0 || t == 0.0 {
        return Ok(0.0);
    }
    piece(n, k, 0.0, t)
}

/// Profile on a nondecreasing mesh starting at or above 0, accumulated panel by panel.
pub fn ode_solve(n: usize, k: f64, r: f64, mesh: &[f64]) -> Result<OdeProfile, SolverError> {
    check_domain(n, k, r)?;
    if mesh.iter().any(|&t| t < 0.0 || t > r) || mesh.windows(2).any(|w| w[1] < w[0]) {
        return Err(SolverError::Mesh(crate::mesh::MeshError::Parameters));
    }
    let mut u = Vec::with_capacity(mesh.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &t in mesh {
        if k != 0.0 && t > prev {
            acc += piece(n, k, prev, t)?;
        }
        u.push(acc);
        prev = t;
    }
    Ok(OdeProfile {
        n,
        slope: k,
        r,
        t: mesh.to_vec(),
        du: mesh.iter().map(|&t| rotational_slope(n, k, t)).collect(),
        u,
        series: rotational_series(n, k, 4),
    })
}

/// `Σ_m C(2m, m) 4^{−m} K^{2m+1} t^{(2m+1)n+1} / ((2m+1)n + 1)` for `m < terms`.
pub fn rotational_series(n: usize, k: f64, terms: usize) -> Vec<(u32, f64)> {
    let mut binom = 1.0;
    let mut out = Vec::with_capacity(terms);
    for m in 0..terms {
        if m > 0 {
            binom *= (2 * m - 1) as f64 / (2 * m) as f64;
        }
        let p = (2 * m + 1) * n + 1;
        out.push((p as u32, binom * math::powi(k, 2 * m as i32 + 1) / p as f64));
    }
    out
}

/// Exact counterpart of [`rotational_series`].
pub fn rotational_series_exact(n: usize, k: &Rational, terms: usize) -> Vec<(u32, Rational)> {
    let mut binom = Rational::one();
    let mut power = k.clone();
    let k2 = k * k;
    let mut out = Vec::with_capacity(terms);
    for m in 0..terms {
        if m > 0 {
            binom *= Rational::from_frac((2 * m - 1) as i64, (2 * m) as i64);
            power = &power * &k2;
        }
        let p = (2 * m + 1) * n + 1;
        out.push((p as u32, &binom * &power / Rational::from_int(p as i64)));
    }
    out
}
