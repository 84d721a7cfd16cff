//! Small dense kernels: Cholesky, LU with partial pivoting, one-sided Jacobi SVD.
//!
//! Matrices are row-major `&[f64]` slices.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use super::LinalgError;

/// Lower Cholesky factor `L` with `A = L Lᵀ`.
pub fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>, LinalgError> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for p in 0..j {
                s -= l[i * n + p] * l[j * n + p];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(LinalgError::NotPositiveDefinite { pivot: i });
                }
                l[i * n + i] = math::sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b` in place.
pub fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for p in 0..i {
            s -= l[i * n + p] * b[p];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for p in i + 1..n {
            s -= l[p * n + i] * b[p];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Inverse of an SPD matrix from its Cholesky factor.
pub fn cholesky_inverse(l: &[f64], n: usize) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        col.iter_mut().for_each(|c| *c = 0.0);
        col[j] = 1.0;
        cholesky_solve(l, n, &mut col);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    // Symmetrize against rounding.
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (inv[i * n + j] + inv[j * n + i]);
            inv[i * n + j] = m;
            inv[j * n + i] = m;
        }
    }
    inv
}

/// `LU` factorization with partial pivoting, stored compactly.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &[f64], n: usize) -> Result<Self, LinalgError> {
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for i in k + 1..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(LinalgError::Singular { pivot: k });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }
}

/// Thin SVD `A = U Σ Vᵀ` of an `m × n` matrix with `m ≥ n`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub m: usize,
    pub n: usize,
    /// `m × n`, orthonormal columns.
    pub u: Vec<f64>,
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    /// `n × n` orthogonal.
    pub v: Vec<f64>,
}

/// One-sided Jacobi SVD; accurate to high relative precision on graded matrices.
pub fn svd(a: &[f64], m: usize, n: usize) -> Result<Svd, LinalgError> {
    if m < n {
        return Err(LinalgError::Shape);
    }
    let mut u = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let eps = f64::EPSILON;
    // Columns below this squared norm are numerically zero and left alone.
    let tol = eps * math::sqrt(m as f64);
    let negligible = a.iter().map(|x| x * x).sum::<f64>() * eps * eps;
    for sweep in 0..400 {
        let mut rotated = false;
        let mut worst: f64 = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let up = u[i * n + p];
                    let uq = u[i * n + q];
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                if gamma == 0.0 || gamma.abs() <= eps * math::sqrt(alpha * beta) || alpha.min(beta) <= negligible {
                    continue;
                }
                rotated = true;
                worst = worst.max(gamma.abs() / math::sqrt(alpha * beta));
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + math::sqrt(1.0 + zeta * zeta));
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = c * t;
                for i in 0..m {
                    let up = u[i * n + p];
                    let uq = u[i * n + q];
                    u[i * n + p] = c * up - s * uq;
                    u[i * n + q] = s * up + c * uq;
                }
                for i in 0..n {
                    let vp = v[i * n + p];
                    let vq = v[i * n + q];
                    v[i * n + p] = c * vp - s * vq;
                    v[i * n + q] = s * vp + c * vq;
                }
            }
        }
        // Rounding can keep a few pairs just above ε; accept √m·ε late on.
        if !rotated || (sweep >= 60 && worst <= tol) {
            let mut sigma = vec![0.0; n];
            for j in 0..n {
                let norm = math::sqrt((0..m).map(|i| u[i * n + j] * u[i * n + j]).sum::<f64>());
                sigma[j] = norm;
                if norm > 0.0 {
                    for i in 0..m {
                        u[i * n + j] /= norm;
                    }
                }
            }
            // Sort descending.
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap_or(core::cmp::Ordering::Equal));
            let mut us = vec![0.0; m * n];
            let mut vs = vec![0.0; n * n];
            let mut ss = vec![0.0; n];
            for (new, &old) in order.iter().enumerate() {
                ss[new] = sigma[old];
                for i in 0..m {
                    us[i * n + new] = u[i * n + old];
                }
                for i in 0..n {
                    vs[i * n + new] = v[i * n + old];
                }
            }
            return Ok(Svd { m, n, u: us, sigma: ss, v: vs });
        }
    }
    Err(LinalgError::NoConvergence)
}

impl Svd {
    /// 2-norm condition number; infinite for rank-deficient input.
    pub fn condition(&self) -> f64 {
        let max = self.sigma.first().copied().unwrap_or(0.0);
        let min = self.sigma.last().copied().unwrap_or(0.0);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Least-squares solution `argmin |A x − b|`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (m, n) = (self.m, self.n);
        let mut x = vec![0.0; n];
        let cutoff = self.sigma.first().copied().unwrap_or(0.0) * f64::EPSILON * (m as f64);
        for k in 0..n {
            let s = self.sigma[k];
            if s <= cutoff {
                continue;
            }
            let mut dot = 0.0;
            for i in 0..m {
                dot += self.u[i * n + k] * b[i];
            }
            let w = dot / s;
            for j in 0..n {
                x[j] += self.v[j * n + k] * w;
            }
        }
        x
    }

    /// `(AᵀA)⁻¹ = V Σ⁻² Vᵀ`, for parameter covariances.
    pub fn normal_inverse(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for k in 0..n {
            let s = self.sigma[k];
            if s == 0.0 {
                continue;
            }
            let w = 1.0 / (s * s);
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] += self.v[i * n + k] * self.v[j * n + k] * w;
                }
            }
        }
        out
    }
}

/// Determinant from a Cholesky factor.
pub fn cholesky_det(l: &[f64], n: usize) -> f64 {
    math::powi((0..n).map(|i| l[i * n + i]).product::<f64>(), 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_roundtrip() {
        let a = [4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0];
        let l = cholesky(&a, 3).unwrap();
        let inv = cholesky_inverse(&l, 3);
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|p| a[i * 3 + p] * inv[p * 3 + j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_err());
    }

    #[test]
    fn lu_solves() {
        let a = [0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let lu = Lu::factor(&a, 3).unwrap();
        let x = lu.solve(&[3.0, 2.0, 4.0]);
        for (xi, e) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((xi - e).abs() < 1e-14);
        }
    }

    #[test]
    fn svd_least_squares() {
        // Fit y = 1 + 2x on exact data.
        let xs = [0.0, 0.5, 1.0, 1.5, 2.0];
        let mut a = Vec::new();
        let mut b = Vec::new();
        for &x in &xs {
            a.push(1.0);
            a.push(x);
            b.push(1.0 + 2.0 * x);
        }
        let s = svd(&a, 5, 2).unwrap();
        let c = s.solve(&b);
        assert!((c[0] - 1.0).abs() < 1e-13 && (c[1] - 2.0).abs() < 1e-13);
        assert!(s.sigma[0] >= s.sigma[1]);
    }
}
