//! Series-valued metric algebra: `g = I + Du Duᵀ`, its inverse and `Q` in `t²`-scaled form.

use alloc::vec::Vec;

use crate::series::{Axis, LogSeries, Scalar, SeriesError, VectorLogSeries};

use super::GeometryError;

/// Dense matrix of [`LogSeries`] entries, row-major.
#[derive(Clone, PartialEq, Debug)]
pub struct SeriesMat<S: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<LogSeries<S>>,
}

impl<S: Scalar> SeriesMat<S> {
    pub fn from_entries(rows: usize, cols: usize, data: Vec<LogSeries<S>>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must be rows × cols");
        SeriesMat { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize, like: &LogSeries<S>) -> Self {
        let z = like.zero_like();
        SeriesMat { rows, cols, data: (0..rows * cols).map(|_| z.clone()).collect() }
    }

    pub fn identity(n: usize, like: &LogSeries<S>) -> Self {
        let mut m = Self::zeros(n, n, like);
        for i in 0..n {
            m.data[i * n + i] = like.one_like();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &LogSeries<S> {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: LogSeries<S>) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[LogSeries<S>] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        SeriesMat { rows: self.cols, cols: self.rows, data }
    }

    pub fn mul(&self, other: &Self) -> Result<Self, GeometryError> {
        if self.cols != other.rows {
            return Err(GeometryError::Shape);
        }
        let mut data = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = self.get(i, 0).mul(other.get(0, j))?;
                for p in 1..self.cols {
                    acc.add_assign(&self.get(i, p).mul(other.get(p, j))?)?;
                }
                data.push(acc);
            }
        }
        Ok(SeriesMat { rows: self.rows, cols: other.cols, data })
    }

    /// `self · selfᵀ`, filling only one triangle of products.
    pub fn gram_rows(&self) -> Result<Self, GeometryError> {
        let n = self.rows;
        let mut out = Self::zeros(n, n, &self.data[0]);
        for i in 0..n {
            for j in 0..=i {
                let mut acc = self.get(i, 0).mul(self.get(j, 0))?;
                for p in 1..self.cols {
                    acc.add_assign(&self.get(i, p).mul(self.get(j, p))?)?;
                }
                out.set(j, i, acc.clone());
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self, GeometryError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(GeometryError::Shape);
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SeriesMat { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, GeometryError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(GeometryError::Shape);
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SeriesMat { rows: self.rows, cols: self.cols, data })
    }

    pub fn map(&self, f: impl Fn(&LogSeries<S>) -> LogSeries<S>) -> Self {
        SeriesMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    /// True iff every entry is zero.
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.is_zero())
    }

    /// Inverse and determinant by Gauss-Jordan elimination over the series ring.
    ///
    /// Pivots are chosen by the size of their constant coefficient at `(t, y') = 0`,
    /// which is enough for any matrix invertible in the truncated ring.
    pub fn inverse_and_det(&self) -> Result<(Self, LogSeries<S>), GeometryError> {
        let n = self.rows;
        if n != self.cols {
            return Err(GeometryError::Shape);
        }
        let mut a = self.clone();
        let mut inv = Self::identity(n, &self.data[0]);
        let mut det = self.data[0].one_like();
        let mut negate = false;
        let base = |s: &LogSeries<S>| s.coeff(0, 0).map(|c| c.constant_term().abs_f64()).unwrap_or(0.0);
        for c in 0..n {
            let mut p = c;
            let mut best = base(a.get(c, c));
            for r in c + 1..n {
                let v = base(a.get(r, c));
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return Err(GeometryError::SingularMetric);
            }
            if p != c {
                a.swap_rows(p, c);
                inv.swap_rows(p, c);
                negate = !negate;
            }
            let pivot = a.get(c, c).clone();
            det = det.mul(&pivot)?;
            let pinv = pivot.inverse()?;
            for j in 0..n {
                let v = a.get(c, j).mul(&pinv)?;
                a.set(c, j, v);
                let w = inv.get(c, j).mul(&pinv)?;
                inv.set(c, j, w);
            }
            for r in 0..n {
                if r == c || a.get(r, c).is_zero() {
                    continue;
                }
                let f = a.get(r, c).clone();
                for j in 0..n {
                    let v = a.get(r, j).sub(&f.mul(a.get(c, j))?)?;
                    a.set(r, j, v);
                    let w = inv.get(r, j).sub(&f.mul(inv.get(c, j))?)?;
                    inv.set(r, j, w);
                }
            }
        }
        if negate {
            det = det.neg();
        }
        Ok((inv, det))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

/// Induced metric `g_{ij}` of a graph with its inverse and determinant.
#[derive(Clone, PartialEq, Debug)]
pub struct MetricSeries<S: Scalar> {
    pub n: usize,
    pub g: SeriesMat<S>,
    pub g_inv: SeriesMat<S>,
    pub det_g: LogSeries<S>,
}

/// `Du` as an `n × k` matrix: row `i` is the derivative along `y^{i+1}`, the last
/// row is `∂_t`; column `l` is the component `u_l`.
pub fn gradient_series<S: Scalar>(u: &VectorLogSeries<S>) -> Result<SeriesMat<S>, GeometryError> {
    let k = u.codim();
    let nv = u.component(0).num_vars();
    let n = nv + 1;
    let mut data = Vec::with_capacity(n * k);
    for i in 0..n {
        let axis = if i + 1 == n { Axis::T } else { Axis::Tangential(i) };
        for l in 0..k {
            data.push(u.component(l).diff(axis)?);
        }
    }
    Ok(SeriesMat::from_entries(n, k, data))
}

/// `g = I + Du Duᵀ` from an `n × k` gradient, with inverse and determinant.
pub fn metric_from_gradient_series<S: Scalar>(du: &SeriesMat<S>) -> Result<MetricSeries<S>, GeometryError> {
    let n = du.rows();
    let g = SeriesMat::identity(n, du.get(0, 0)).add(&du.gram_rows()?)?;
    metric_inverse(&g)
}

/// Inverts a metric matrix by elimination; the determinant is the product of pivots.
pub fn metric_inverse<S: Scalar>(g: &SeriesMat<S>) -> Result<MetricSeries<S>, GeometryError> {
    let (g_inv, det_g) = g.inverse_and_det()?;
    Ok(MetricSeries { n: g.rows(), g: g.clone(), g_inv, det_g })
}

/// `t²`-scaled value of `Q`, flagged so the convention stays explicit downstream.
#[derive(Clone, PartialEq, Debug)]
pub struct ScaledResidual<S: Scalar> {
    /// `t² g^{ij} w_{s,ij} − n t w_{s,t}` per component.
    pub residual: VectorLogSeries<S>,
    /// Always `true`: the residual is `t² · Q[w]`.
    pub t_squared: bool,
}

/// `t² Q[w]_s = t² g^{ij}[w] w_{s,ij} − n t ∂_t w_s`, computed from scratch at
/// truncation order `order` (metric built, inverted by elimination, contracted).
pub fn q_operator_series<S: Scalar>(
    w: &VectorLogSeries<S>,
    order: u32,
) -> Result<ScaledResidual<S>, GeometryError> {
    let comps: Vec<LogSeries<S>> = w.components().iter().map(|c| c.with_t_order(order)).collect();
    let w = VectorLogSeries::new(comps)?;
    let du = gradient_series(&w)?;
    let metric = metric_from_gradient_series(&du)?;
    let n = du.rows();
    let mut out = Vec::with_capacity(w.codim());
    for (s, ws) in w.components().iter().enumerate() {
        let mut acc = ws.euler().scale(&S::from_int(-(n as i64)));
        for i in 0..n {
            let di = du.get(i, s);
            for j in i..n {
                let axis = if j + 1 == n { Axis::T } else { Axis::Tangential(j) };
                let h = scaled_second(di, axis)?;
                let mut term = metric.g_inv.get(i, j).mul(&h)?;
                if i != j {
                    term = term.scale(&S::from_int(2));
                }
                acc.add_assign(&term)?;
            }
        }
        out.push(acc);
    }
    Ok(ScaledResidual { residual: VectorLogSeries::new(out)?, t_squared: true })
}

/// `t² ∂_j (first)`, where `first` is already a first derivative.
///
/// The `t`-direction uses `t² ∂_t f = t (t ∂_t f)` so no slot leaves the invariant set.
pub(crate) fn scaled_second<S: Scalar>(first: &LogSeries<S>, axis: Axis) -> Result<LogSeries<S>, SeriesError> {
    match axis {
        Axis::T => Ok(first.euler().shift_t(1)),
        a => Ok(first.diff(a)?.shift_t(2)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{PolyJet, Rational};
    use alloc::vec;

    type Q = Rational;

    fn q(a: i64, b: i64) -> Q {
        <Q as Scalar>::from_frac(a, b)
    }

    #[test]
    fn identity_metric_from_zero_gradient() {
        let z = LogSeries::<Q>::zero(1, 2, 4, 2);
        let du = SeriesMat::zeros(2, 1, &z);
        let m = metric_from_gradient_series(&du).unwrap();
        assert_eq!(m.g_inv, SeriesMat::identity(2, &z));
        assert_eq!(m.det_g, z.one_like());
    }

    #[test]
    fn gnn_of_quadratic_profile() {
        // u = c t² with c = 3/5: g_nn = 1 + 4c² t².
        let c = q(3, 5);
        let jet = PolyJet::constant(1, 2, c.clone());
        let u = LogSeries::monomial(jet, 2, 0, 6, 2).unwrap();
        let du = gradient_series(&VectorLogSeries::new(vec![u]).unwrap()).unwrap();
        let m = metric_from_gradient_series(&du).unwrap();
        let gnn = m.g.get(1, 1);
        let expect = Scalar::mul(&q(4, 1), &Scalar::mul(&c, &c));
        assert_eq!(gnn.coeff(2, 0).unwrap().constant_term(), expect);
        assert_eq!(gnn.coeff(0, 0).unwrap().constant_term(), q(1, 1));
        // g · g⁻¹ = I exactly.
        let prod = m.g.mul(&m.g_inv).unwrap();
        assert_eq!(prod, SeriesMat::identity(2, gnn));
    }

    #[test]
    fn scaled_residual_of_t_squared() {
        for n in 2..=4usize {
            let jet = PolyJet::<Q>::one(n - 1, 2);
            let w = LogSeries::monomial(jet, 2, 0, 6, 2).unwrap();
            let r = q_operator_series(&VectorLogSeries::new(vec![w]).unwrap(), 6).unwrap();
            let c2 = r.residual.component(0).coeff(2, 0).unwrap().constant_term();
            assert_eq!(c2, q(2 * (1 - n as i64), 1));
            assert!(r.residual.component(0).coeff(3, 0).is_none());
            assert!(r.t_squared);
        }
    }
}
