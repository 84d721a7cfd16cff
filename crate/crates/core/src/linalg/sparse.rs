//! Sparse matrices and the linear solvers used by the Newton iterations.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use super::LinalgError;

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

/// Row-by-row builder; entries of a row may come in any order and repeat.
#[derive(Clone, Debug, Default)]
pub struct CsrBuilder {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    pending: Vec<(usize, f64)>,
}

impl CsrBuilder {
    pub fn new(n: usize) -> Self {
        CsrBuilder { n, row_ptr: vec![0], ..Default::default() }
    }

    pub fn push(&mut self, col: usize, val: f64) {
        debug_assert!(col < self.n);
        self.pending.push((col, val));
    }

    /// Closes the current row, merging duplicates in column order.
    pub fn end_row(&mut self) {
        self.pending.sort_by_key(|&(c, _)| c);
        let mut last: Option<usize> = None;
        for &(c, v) in &self.pending {
            if last == Some(c) {
                *self.vals.last_mut().unwrap() += v;
            } else {
                self.cols.push(c);
                self.vals.push(v);
                last = Some(c);
            }
        }
        self.pending.clear();
        self.row_ptr.push(self.cols.len());
    }

    pub fn finish(self) -> Csr {
        assert_eq!(self.row_ptr.len(), self.n + 1, "every row must be closed");
        Csr { n: self.n, row_ptr: self.row_ptr, cols: self.cols, vals: self.vals }
    }
}

impl Csr {
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut b = CsrBuilder::new(rows.len());
        for row in rows {
            for (c, v) in row {
                b.push(c, v);
            }
            b.end_row();
        }
        b.finish()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    /// Largest `|i − j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                bw = bw.max(i.abs_diff(j));
            }
        }
        bw
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(p) => self.vals[r.start + p],
            Err(_) => 0.0,
        }
    }
}

/// Incomplete LU with zero fill on the pattern of `A`.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    a: Csr,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &Csr) -> Result<Self, LinalgError> {
        let mut f = a.clone();
        let n = f.n;
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in f.row_ptr[i]..f.row_ptr[i + 1] {
                if f.cols[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(LinalgError::Singular { pivot: i });
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (f.row_ptr[i], f.row_ptr[i + 1]);
            for k in start..end {
                pos[f.cols[k]] = k;
            }
            for k in start..end {
                let j = f.cols[k];
                if j >= i {
                    break;
                }
                let d = f.vals[diag[j]];
                if d == 0.0 {
                    return Err(LinalgError::Singular { pivot: j });
                }
                let m = f.vals[k] / d;
                f.vals[k] = m;
                for kk in diag[j] + 1..f.row_ptr[j + 1] {
                    let c = f.cols[kk];
                    let p = pos[c];
                    if p != usize::MAX {
                        f.vals[p] -= m * f.vals[kk];
                    }
                }
            }
            for k in start..end {
                pos[f.cols[k]] = usize::MAX;
            }
            if f.vals[diag[i]] == 0.0 {
                return Err(LinalgError::Singular { pivot: i });
            }
        }
        Ok(Ilu0 { a: f, diag })
    }

    /// Applies `(LU)⁻¹` in place.
    pub fn apply(&self, x: &mut [f64]) {
        let f = &self.a;
        for i in 0..f.n {
            let mut s = x[i];
            for k in f.row_ptr[i]..self.diag[i] {
                s -= f.vals[k] * x[f.cols[k]];
            }
            x[i] = s;
        }
        for i in (0..f.n).rev() {
            let mut s = x[i];
            for k in self.diag[i] + 1..f.row_ptr[i + 1] {
                s -= f.vals[k] * x[f.cols[k]];
            }
            x[i] = s / f.vals[self.diag[i]];
        }
    }
}

/// Outcome of an iterative solve.
#[derive(Clone, Debug, PartialEq)]
pub struct IterativeStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Right-preconditioned restarted GMRES with ILU(0).
pub fn gmres(
    a: &Csr,
    b: &[f64],
    x: &mut [f64],
    precond: &Ilu0,
    rtol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<IterativeStats, LinalgError> {
    let n = a.n;
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(IterativeStats { iterations: 0, relative_residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut total = 0usize;
    let m = restart.max(1);
    loop {
        a.matvec(x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm2(&r);
        if beta / bnorm <= rtol {
            return Ok(IterativeStats { iterations: total, relative_residual: beta / bnorm });
        }
        if total >= max_iter {
            return Err(LinalgError::NoConvergence);
        }
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![0.0; (m + 1) * m];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let mut z = basis[k].clone();
            precond.apply(&mut z);
            a.matvec(&z, &mut w);
            // Modified Gram-Schmidt, twice for stability.
            for _pass in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let d = dot(&w, q);
                    h[i * m + k] += d;
                    for p in 0..n {
                        w[p] -= d * q[p];
                    }
                }
            }
            let hn = norm2(&w);
            h[(k + 1) * m + k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i * m + k] + sn[i] * h[(i + 1) * m + k];
                h[(i + 1) * m + k] = -sn[i] * h[i * m + k] + cs[i] * h[(i + 1) * m + k];
                h[i * m + k] = t;
            }
            let (c, s) = givens(h[k * m + k], h[(k + 1) * m + k]);
            cs[k] = c;
            sn[k] = s;
            h[k * m + k] = c * h[k * m + k] + s * h[(k + 1) * m + k];
            h[(k + 1) * m + k] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            total += 1;
            k_used = k + 1;
            let res = g[k + 1].abs() / bnorm;
            if res <= rtol * 0.5 || hn == 0.0 || total >= max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        // Back substitution for the Krylov coefficients.
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i * m + j] * y[j];
            }
            y[i] = s / h[i * m + i];
        }
        let mut dx = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            for p in 0..n {
                dx[p] += yj * basis[j][p];
            }
        }
        precond.apply(&mut dx);
        for p in 0..n {
            x[p] += dx[p];
        }
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = math::hypot(a, b);
        (a / r, b / r)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Banded LU with partial pivoting (LAPACK `gbtrf` layout: `kl` extra rows for fill).
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row-major band storage: row `i`, column offset `j − i + kl` over width `2kl + ku + 1`.
    band: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &Csr) -> Result<Self, LinalgError> {
        let n = a.n;
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..n {
            for (j, _) in a.row(i) {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        let width = 2 * kl + ku + 1;
        let mut band = vec![0.0; n * width];
        let idx = |i: usize, j: usize| i * width + (j + kl - i);
        for i in 0..n {
            for (j, v) in a.row(i) {
                band[idx(i, j)] += v;
            }
        }
        let ku_fill = kl + ku;
        let mut piv = vec![0; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = band[idx(k, k)].abs();
            for i in k + 1..=last {
                let v = band[idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(LinalgError::Singular { pivot: k });
            }
            piv[k] = p;
            let jend = (k + ku_fill).min(n - 1);
            if p != k {
                for j in k..=jend {
                    band.swap(idx(k, j), idx(p, j));
                }
            }
            let d = band[idx(k, k)];
            for i in k + 1..=last {
                let f = band[idx(i, k)] / d;
                band[idx(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..=jend {
                        let v = band[idx(k, j)];
                        band[idx(i, j)] -= f * v;
                    }
                }
            }
        }
        Ok(BandedLu { n, kl, ku, band, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, kl) = (self.n, self.kl);
        let width = 2 * kl + self.ku + 1;
        let idx = |i: usize, j: usize| i * width + (j + kl - i);
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let last = (k + kl).min(n - 1);
            for i in k + 1..=last {
                x[i] -= self.band[idx(i, k)] * x[k];
            }
        }
        let ufill = kl + self.ku;
        for i in (0..n).rev() {
            let mut s = x[i];
            let jend = (i + ufill).min(n - 1);
            for j in i + 1..=jend {
                s -= self.band[idx(i, j)] * x[j];
            }
            x[i] = s / self.band[idx(i, i)];
        }
        x
    }

    /// Floating-point work estimate `n · kl · (kl + ku)` for choosing a solver.
    pub fn cost_estimate(a: &Csr) -> f64 {
        let bw = a.bandwidth() as f64;
        a.n as f64 * bw * 2.0 * bw
    }
}
