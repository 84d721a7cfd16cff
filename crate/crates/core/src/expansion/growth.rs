//! Empirical growth of the coefficient table.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math;
use crate::series::Scalar;

use super::ExpansionResult;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GrowthReport {
    /// `(i, N_i)` with `N_i = Σ_{j,s} Σ_β |c_β| ρ^{|β|}`, a bound on
    /// `sup_{|y'| ≤ ρ} ‖c_{i,·}‖`; only `i ≥ 2`.
    pub norms: Vec<(u32, f64)>,
    /// `(i, N_i^{1/i})` for the nonzero norms.
    pub root_test: Vec<(u32, f64)>,
    /// `e^b` from fitting `log N_i ≈ a + b i + c log i` (plain `a + b i` when
    /// fewer than four orders are nonzero).
    pub growth_rate: Option<f64>,
    /// `1 / growth_rate`.
    pub series_radius: Option<f64>,
    /// `(l, T_l / (B^{l−1} (l−1)!))` with `T_l = max_{i,s} Σ_{|α|=l} |∂^α c_i(0)|`
    /// and `B = max(growth_rate, 1)`.
    pub tangential: Vec<(u32, f64)>,
    /// Local slope over the last nonzero orders exceeds the fitted one by a factor 2.
    pub super_geometric: bool,
    /// Every coefficient with `i ≥ 2` is zero.
    pub degenerate: bool,
}

/// Root-test and regression summary of `res` on `|y'| ≤ rho`.
pub fn convergence_diagnostics<S: Scalar>(res: &ExpansionResult<S>, rho: f64) -> GrowthReport {
    let k = res.spec.trunc_order;
    let mut norms = Vec::new();
    for i in 2..=k {
        let v: f64 = res
            .coeffs
            .range((i, 0)..=(i, u32::MAX))
            .flat_map(|(_, jets)| jets.iter().map(|c| c.weighted_l1(rho)))
            .sum();
        norms.push((i, v));
    }
    let nz: Vec<(f64, f64)> = norms
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|&(i, v)| (i as f64, math::ln(v)))
        .collect();
    let root_test = norms
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|&(i, v)| (i, math::powf(v, 1.0 / i as f64)))
        .collect();
    let slope = if nz.len() >= 4 { power_corrected_slope(&nz) } else { regression_slope(&nz) };
    let growth_rate = slope.map(math::exp);
    let super_geometric = match (slope, nz.len()) {
        (Some(s), len) if len >= 4 => {
            let tail = &nz[len - 3..];
            regression_slope(tail).is_some_and(|t| t - s > core::f64::consts::LN_2)
        }
        _ => false,
    };

    let b = growth_rate.unwrap_or(1.0).max(1.0);
    let mut tangential = Vec::new();
    for l in 1..=res.spec.jet_degree {
        let mut worst: f64 = 0.0;
        for jets in res.coeffs.values() {
            for c in jets {
                let s: f64 = c
                    .terms()
                    .filter(|(m, _)| m.degree() == l)
                    .map(|(m, v)| {
                        let fact: f64 = m
                            .exponents(c.num_vars())
                            .iter()
                            .map(|&e| factorial(e))
                            .product();
                        fact * v.abs_f64()
                    })
                    .sum();
                worst = worst.max(s);
            }
        }
        let denom = math::powi(b, l as i32 - 1) * factorial(l - 1);
        tangential.push((l, worst / denom));
    }
    GrowthReport {
        norms,
        root_test,
        growth_rate,
        series_radius: growth_rate.map(|g| 1.0 / g),
        tangential,
        super_geometric,
        degenerate: nz.is_empty(),
    }
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(|v| v as f64).product()
}

fn regression_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn power_corrected_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let mut ata = [0.0; 9];
    let mut atb = [0.0; 3];
    for &(i, y) in pts {
        let row = [1.0, i, math::ln(i)];
        for a in 0..3 {
            atb[a] += row[a] * y;
            for b in 0..3 {
                ata[a * 3 + b] += row[a] * row[b];
            }
        }
    }
    let lu = crate::linalg::Lu::factor(&ata, 3).ok()?;
    let x = lu.solve(&atb);
    x[1].is_finite().then_some(x[1])
}
