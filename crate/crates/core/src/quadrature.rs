//! Adaptive Gauss–Kronrod (7/15) and Gauss–Legendre rules.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadError {
    #[error("non-finite integrand value at x = {x}")]
    NonFinite { x: f64 },
    #[error("tolerance not reached (estimated error {error:e})")]
    Tolerance { error: f64 },
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel: (estimate, |K15 − G7|).
fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite { x: c });
    }
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        if !f1.is_finite() || !f2.is_finite() {
            return Err(QuadError::NonFinite { x: c - x });
        }
        rk += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            rg += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((rk * h, ((rk - rg) * h).abs()))
}

/// Adaptive integral of `f` over `[a, b]` to `max(abs_tol, rel_tol·|I|)`; returns
/// the value and the summed error estimate.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64), QuadError> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    // Worklist of panels, bisecting the worst one; deterministic order.
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = kronrod(&mut f, a, b)?;
    panels.push((a, b, v, e));
    for _ in 0..2000 {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok((total, err));
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, p)| if p.3 > be { (i, p.3) } else { (bi, be) });
        let (pa, pb, _, _) = panels.swap_remove(idx);
        let m = 0.5 * (pa + pb);
        let (v1, e1) = kronrod(&mut f, pa, m)?;
        let (v2, e2) = kronrod(&mut f, m, pb)?;
        panels.push((pa, m, v1, e1));
        panels.push((m, pb, v2, e2));
        if m <= pa || m >= pb {
            break;
        }
    }
    let total: f64 = panels.iter().map(|p| p.2).sum();
    let err: f64 = panels.iter().map(|p| p.3).sum();
    if err <= 10.0 * abs_tol.max(rel_tol * total.abs()) {
        Ok((total, err))
    } else {
        Err(QuadError::Tolerance { error: err })
    }
}

/// `∫_a^b` split at geometric breakpoints `a, 2a, 4a, …` (for `0 < a < b`), which
/// keeps panels matched to integrands with power-law behavior at small arguments.
pub fn integrate_geometric<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64), QuadError> {
    let mut lo = a;
    let mut total = 0.0;
    let mut err = 0.0;
    while lo < b {
        let hi = (2.0 * lo).min(b);
        let (v, e) = integrate(&mut f, lo, hi, abs_tol * 0.01, rel_tol)?;
        total += v;
        err += e;
        lo = hi;
    }
    Ok((total, err))
}

/// `∫_0^b` of an integrand vanishing at 0, split at `b·2^{−m}`; the omitted piece
/// below `b·2^{−levels}` is neglected.
pub fn integrate_from_zero<F: FnMut(f64) -> f64>(
    mut f: F,
    b: f64,
    levels: u32,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64), QuadError> {
    if b == 0.0 {
        return Ok((0.0, 0.0));
    }
    let lo = b * math::powi(0.5, levels as i32);
    integrate_geometric(&mut f, lo, b, abs_tol, rel_tol)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = math::cos(PI * (i as f64 + 0.75) / (m as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { z } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (z * pm - pm1) / (z * z - 1.0);
            let dz = pm / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_polynomial_exact() {
        let (v, _) = integrate(|x| x.powi(9) - 3.0 * x * x, 0.0, 2.0, 1e-14, 1e-14).unwrap();
        assert!((v - (1024.0 / 10.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn adaptive_sqrt() {
        let (v, _) = integrate(|x| x.sqrt(), 0.0, 1.0, 1e-13, 1e-13).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_power_law() {
        let (v, _) = integrate_geometric(|x| x.powi(-3), 1e-3, 1.0, 1e-12, 1e-14).unwrap();
        assert!((v - 0.5 * (1e6 - 1.0)).abs() / 5e5 < 1e-13);
    }

    #[test]
    fn legendre_rules() {
        for m in [1usize, 2, 5, 12] {
            let (x, w) = gauss_legendre(m);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-14);
            // Exact for degree 2m − 1.
            let d = 2 * m - 2;
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
            assert!((q - 2.0 / (d as f64 + 1.0)).abs() < 1e-13);
        }
    }
}
