//! Tensor grid `[−ρ, ρ]^{n−1} × {t_j}` with graded normal nodes `t_j = r (j/J)^γ`,
//! nodal fields on it, and the centered stencils shared by the solver and the
//! variational residuals.
//!
//! Nodes are numbered `tang · (J + 1) + j`, tangential indices mixed-radix with
//! axis 0 fastest.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeshError {
    #[error("grid needs n ≥ 2 and codim ≥ 1")]
    Dimension,
    #[error("need at least 3 nodes per tangential axis and J ≥ 2 (got {ny}, {nt})")]
    TooCoarse { ny: usize, nt: usize },
    #[error("grading exponent must be ≥ 1 and extents positive")]
    Parameters,
    #[error("field has {got} values, expected {expected}")]
    FieldShape { got: usize, expected: usize },
    #[error("non-finite field value at node {node}")]
    NonFinite { node: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Bottom,
    Top,
    Lateral,
    Interior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Grid {
    pub n: usize,
    pub codim: usize,
    pub rho: f64,
    /// Nodes per tangential axis.
    pub ny: usize,
    pub r: f64,
    /// Number of normal intervals `J`.
    pub nt: usize,
    pub gamma: f64,
}

/// Weighted node list representing one difference operator at a node.
pub type Stencil = Vec<(usize, f64)>;

/// First derivatives (`n` stencils, last is `∂_t`) and scaled second derivatives
/// `t² ∂_i∂_j` (`n × n`, row-major) at one interior node.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeStencils {
    pub grad: Vec<Stencil>,
    pub hess: Vec<Stencil>,
}

impl Grid {
    pub fn new(n: usize, codim: usize, rho: f64, ny: usize, r: f64, nt: usize, gamma: f64) -> Result<Self, MeshError> {
        if n < 2 || codim < 1 {
            return Err(MeshError::Dimension);
        }
        if ny < 3 || nt < 2 {
            return Err(MeshError::TooCoarse { ny, nt });
        }
        if !(gamma >= 1.0 && rho > 0.0 && r > 0.0) {
            return Err(MeshError::Parameters);
        }
        Ok(Grid { n, codim, rho, ny, r, nt, gamma })
    }

    pub fn tangential_count(&self) -> usize {
        self.ny.pow(self.n as u32 - 1)
    }

    pub fn num_nodes(&self) -> usize {
        self.tangential_count() * (self.nt + 1)
    }

    pub fn node(&self, tang: usize, j: usize) -> usize {
        tang * (self.nt + 1) + j
    }

    pub fn split(&self, node: usize) -> (usize, usize) {
        (node / (self.nt + 1), node % (self.nt + 1))
    }

    pub fn hy(&self) -> f64 {
        2.0 * self.rho / (self.ny - 1) as f64
    }

    pub fn y_node(&self, i: usize) -> f64 {
        -self.rho + i as f64 * self.hy()
    }

    pub fn xi(&self, j: usize) -> f64 {
        j as f64 / self.nt as f64
    }

    pub fn t(&self, j: usize) -> f64 {
        if j == self.nt {
            return self.r;
        }
        self.r * math::powf(self.xi(j), self.gamma)
    }

    pub fn t_nodes(&self) -> Vec<f64> {
        (0..=self.nt).map(|j| self.t(j)).collect()
    }

    pub fn tang_multi(&self, tang: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n - 1);
        let mut rest = tang;
        for _ in 0..self.n - 1 {
            out.push(rest % self.ny);
            rest /= self.ny;
        }
        out
    }

    pub fn y_of(&self, tang: usize) -> Vec<f64> {
        self.tang_multi(tang).into_iter().map(|i| self.y_node(i)).collect()
    }

    /// Offset of one tangential step along `axis`, in node numbers.
    pub fn stride(&self, axis: usize) -> usize {
        self.ny.pow(axis as u32) * (self.nt + 1)
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        let (tang, j) = self.split(node);
        if j == 0 {
            NodeKind::Bottom
        } else if self.tang_multi(tang).iter().any(|&i| i == 0 || i + 1 == self.ny) {
            NodeKind::Lateral
        } else if j == self.nt {
            NodeKind::Top
        } else {
            NodeKind::Interior
        }
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&q| self.kind(q) == NodeKind::Interior).collect()
    }

    /// Centered stencils at an interior node; `t u_t = (ξ/γ) u_ξ` and
    /// `t² u_tt = (ξ/γ)² u_ξξ − ξ(γ−1)/γ² u_ξ` in the uniform variable `ξ = j/J`.
    pub fn stencils(&self, node: usize) -> NodeStencils {
        let n = self.n;
        let (_, j) = self.split(node);
        let hy = self.hy();
        let h = 1.0 / self.nt as f64;
        let xi = self.xi(j);
        let t = self.t(j);
        let g = self.gamma;
        let e = xi / g;
        let mut grad = Vec::with_capacity(n);
        for a in 0..n - 1 {
            let s = self.stride(a);
            grad.push(vec![(node + s, 0.5 / hy), (node - s, -0.5 / hy)]);
        }
        let ct = e / t * 0.5 / h;
        grad.push(vec![(node + 1, ct), (node - 1, -ct)]);

        let mut hess = vec![Vec::new(); n * n];
        let t2 = t * t;
        for a in 0..n - 1 {
            let sa = self.stride(a);
            hess[a * n + a] = vec![(node + sa, t2 / (hy * hy)), (node, -2.0 * t2 / (hy * hy)), (node - sa, t2 / (hy * hy))];
            for b in a + 1..n - 1 {
                let sb = self.stride(b);
                let w = t2 / (4.0 * hy * hy);
                let st = vec![
                    (node + sa + sb, w),
                    (node + sa - sb, -w),
                    (node - sa + sb, -w),
                    (node - sa - sb, w),
                ];
                hess[a * n + b] = st.clone();
                hess[b * n + a] = st;
            }
            let w = t * e / (4.0 * hy * h);
            let st = vec![(node + sa + 1, w), (node + sa - 1, -w), (node - sa + 1, -w), (node - sa - 1, w)];
            hess[a * n + (n - 1)] = st.clone();
            hess[(n - 1) * n + a] = st;
        }
        let c2 = e * e / (h * h);
        let c1 = xi * (g - 1.0) / (g * g) * 0.5 / h;
        hess[n * n - 1] = vec![(node + 1, c2 - c1), (node, -2.0 * c2), (node - 1, c2 + c1)];
        NodeStencils { grad, hess }
    }
}

/// `k` values per node, node-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, MeshError> {
        let expected = grid.num_nodes() * grid.codim;
        if values.len() != expected {
            return Err(MeshError::FieldShape { got: values.len(), expected });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(MeshError::NonFinite { node: i / grid.codim });
        }
        Ok(GridField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let len = grid.num_nodes() * grid.codim;
        GridField { grid, values: vec![0.0; len] }
    }

    /// Samples `f(y', t)` at every node.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64], f64) -> Vec<f64>) -> Self {
        let k = grid.codim;
        let mut values = Vec::with_capacity(grid.num_nodes() * k);
        for tang in 0..grid.tangential_count() {
            let y = grid.y_of(tang);
            for j in 0..=grid.nt {
                let v = f(&y, grid.t(j));
                values.extend_from_slice(&v[..k]);
            }
        }
        GridField { grid, values }
    }

    pub fn at(&self, node: usize) -> &[f64] {
        let k = self.grid.codim;
        &self.values[node * k..(node + 1) * k]
    }

    pub fn at_mut(&mut self, node: usize) -> &mut [f64] {
        let k = self.grid.codim;
        &mut self.values[node * k..(node + 1) * k]
    }

    /// Gradient (`n × k`, row-major) and scaled Hessian blocks at an interior node.
    pub fn derivatives(&self, st: &NodeStencils) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.n;
        let k = self.grid.codim;
        let mut du = vec![0.0; n * k];
        for (m, s) in st.grad.iter().enumerate() {
            for &(q, w) in s {
                for l in 0..k {
                    du[m * k + l] += w * self.values[q * k + l];
                }
            }
        }
        let mut hess = vec![0.0; k * n * n];
        for (p, s) in st.hess.iter().enumerate() {
            for &(q, w) in s {
                for l in 0..k {
                    hess[l * n * n + p] += w * self.values[q * k + l];
                }
            }
        }
        (du, hess)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        let g = Grid::new(2, 1, 1.0, 5, 1.0, 4, 2.0).unwrap();
        assert_eq!(g.num_nodes(), 25);
        assert_eq!(g.kind(g.node(2, 0)), NodeKind::Bottom);
        assert_eq!(g.kind(g.node(2, 4)), NodeKind::Top);
        assert_eq!(g.kind(g.node(0, 2)), NodeKind::Lateral);
        assert_eq!(g.kind(g.node(2, 2)), NodeKind::Interior);
        assert_eq!(g.interior_nodes().len(), 9);
        assert_eq!(g.t(2), 0.25);
    }

    #[test]
    fn stencils_exact_on_quadratics() {
        // u = y₁² + y₁ t + t²: t²u_{11} = 2t², t²u_{1t} = t², t²u_tt = 2t².
        let g = Grid::new(3, 1, 1.0, 5, 1.0, 8, 2.0).unwrap();
        let f = GridField::from_fn(g.clone(), |y, t| vec![y[0] * y[0] + y[0] * t + t * t + y[1]]);
        let node = g.node(2 + 5 * 2, 4);
        let st = g.stencils(node);
        let (du, h) = f.derivatives(&st);
        let t = g.t(4);
        let y = g.y_of(2 + 5 * 2);
        // u_t is exact only up to the graded-mesh error in ξ; t is quadratic in ξ.
        assert!((du[0] - (2.0 * y[0] + t)).abs() < 1e-12);
        assert!((du[1] - 1.0).abs() < 1e-12);
        assert!((h[0] - 2.0 * t * t).abs() < 1e-12);
        assert!((h[2] - t * t).abs() < 1e-2 * t * t);
        assert!(h[4].abs() < 1e-12);
    }
}
