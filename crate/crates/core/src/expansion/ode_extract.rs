//! Variation-of-parameters solution of the model ODE `t²u'' − n t u' = −F`
//! with homogeneous exponents `0` and `n + 1`, used as an independent oracle for
//! the `y'`-independent recursion.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math;
use crate::linalg::svd;
use crate::quadrature::{integrate_from_zero, integrate_geometric};

use super::ExpansionError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct OdeExtractConfig {
    /// Query points, as fractions of `r`.
    pub query: Vec<f64>,
    /// Fit window `[lo, hi]` as fractions of `r`.
    pub window: (f64, f64),
    pub fit_points: usize,
    /// Highest pure power in the fit basis.
    pub max_power: u32,
    pub rel_tol: f64,
}

impl Default for OdeExtractConfig {
    fn default() -> Self {
        OdeExtractConfig {
            query: (1..=16).map(|k| k as f64 / 16.0).collect(),
            window: (1.0 / 64.0, 1.0 / 4.0),
            fit_points: 48,
            max_power: 0,
            rel_tol: 1e-13,
        }
    }
}

/// Solution samples and the fitted coefficients of `t^{n+1}` and `t^{n+1} log t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OdeExtract {
    pub samples: Vec<(f64, f64)>,
    pub resonant: f64,
    pub resonant_log: f64,
    /// Fitted coefficient of every pure power `t^p`, `p ≥ 1`.
    pub powers: Vec<(u32, f64)>,
    pub fit_residual: f64,
}

/// Evaluates
///
/// ```text
/// u(t) = [u(r) r^{−M} − r^{−M}/M ∫_0^r ζ^{−1}F] t^M
///        + 1/M ∫_0^t ζ^{−1}F + t^M/M ∫_t^r ζ^{−1−M}F,     M = n + 1,
/// ```
///
/// on the query grid and fits `u` on the window against `t^p` (`1 ≤ p ≤ P`) and
/// `t^M log t`. With this orientation a forcing `ζ^p` contributes
/// `−t^p/(p(p − M))` for `p ≠ M` and `−t^M log t / M` at resonance.
pub fn ode_integral_extract<F: Fn(f64) -> f64>(
    forcing: F,
    r: f64,
    n: usize,
    anchor: f64,
    config: &OdeExtractConfig,
) -> Result<OdeExtract, ExpansionError> {
    let m = (n + 1) as i32;
    let mf = m as f64;
    let near = forcing(r * math::powi(0.5, 40));
    let mid = forcing(r * math::powi(0.5, 20));
    if !near.is_finite() || !mid.is_finite() || (near.abs() > 1e-300 && near.abs() >= 0.9 * mid.abs()) {
        return Err(ExpansionError::Divergent);
    }
    let tol = config.rel_tol;
    let quad = |e: crate::quadrature::QuadError| ExpansionError::Inconsistent {
        i: m as u32,
        j: 0,
        detail: alloc::format!("quadrature: {e}"),
    };
    let lower = |t: f64| -> Result<f64, ExpansionError> {
        integrate_from_zero(|z| forcing(z) / z, t, 60, 1e-300, tol).map(|v| v.0).map_err(quad)
    };
    let upper = |t: f64| -> Result<f64, ExpansionError> {
        if t >= r {
            return Ok(0.0);
        }
        integrate_geometric(|z| forcing(z) * math::powi(z, -m - 1), t, r, 1e-300, tol)
            .map(|v| v.0)
            .map_err(quad)
    };
    let total = lower(r)?;
    let a = anchor * math::powi(r, -m) - math::powi(r, -m) / mf * total;
    let u_at = |t: f64| -> Result<f64, ExpansionError> {
        let tm = math::powi(t, m);
        Ok(a * tm + lower(t)? / mf + tm / mf * upper(t)?)
    };

    let samples = config
        .query
        .iter()
        .map(|&q| u_at(q * r).map(|u| (q * r, u)))
        .collect::<Result<Vec<_>, _>>()?;

    // Least-squares fit in the scaled variable s = t / t_hi.
    let p_max = if config.max_power == 0 { m as u32 + 4 } else { config.max_power };
    let t_lo = config.window.0 * r;
    let t_hi = config.window.1 * r;
    let cols = p_max as usize + 1;
    let rows = config.fit_points.max(2 * cols);
    let mut mat = Vec::with_capacity(rows * cols);
    let mut rhs = Vec::with_capacity(rows);
    for q in 0..rows {
        let t = t_lo * math::powf(t_hi / t_lo, q as f64 / (rows - 1) as f64);
        let s = t / t_hi;
        for p in 1..=p_max {
            mat.push(math::powi(s, p as i32));
        }
        mat.push(math::powi(s, m) * math::ln(s));
        rhs.push(u_at(t)?);
    }
    let dec = svd(&mat, rows, cols).map_err(|e| ExpansionError::Inconsistent {
        i: m as u32,
        j: 1,
        detail: alloc::format!("fit: {e}"),
    })?;
    let x = dec.solve(&rhs);
    let mut fit_residual: f64 = 0.0;
    for q in 0..rows {
        let pred: f64 = (0..cols).map(|c| mat[q * cols + c] * x[c]).sum();
        fit_residual = fit_residual.max((pred - rhs[q]).abs());
    }
    // s^M log s = (t^M log t − t^M log t_hi) / t_hi^M.
    let log_coeff = x[cols - 1] / math::powi(t_hi, m);
    let mut powers: Vec<(u32, f64)> = (1..=p_max)
        .map(|p| (p, x[p as usize - 1] / math::powi(t_hi, p as i32)))
        .collect();
    powers[m as usize - 1].1 -= log_coeff * math::ln(t_hi);
    Ok(OdeExtract {
        samples,
        resonant: powers[m as usize - 1].1,
        resonant_log: log_coeff,
        powers,
        fit_residual,
    })
}
