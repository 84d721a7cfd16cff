//! Operator and first-variation residuals of a nodal field at interior nodes.

use alloc::vec::Vec;

use crate::mesh::GridField;

use super::{scaled_q, variation_density, GeometryError, PointMetric};

/// `t² g^{ij} u_{s,ij} − n t u_{s,t}` at every interior node, `k` values per node
/// in the order of [`Grid::interior_nodes`](crate::mesh::Grid::interior_nodes).
pub fn q_operator_grid(u: &GridField) -> Result<Vec<f64>, GeometryError> {
    let g = &u.grid;
    let (n, k) = (g.n, g.codim);
    let nodes = g.interior_nodes();
    let mut out = Vec::with_capacity(nodes.len() * k);
    for &q in &nodes {
        let st = g.stencils(q);
        let (du, hess) = u.derivatives(&st);
        let t = g.t(g.split(q).1);
        let pm = PointMetric::from_gradient(&du, n, k, t)?;
        out.extend(scaled_q(&pm, &du, &hess, k, t));
    }
    Ok(out)
}

/// The three divergence residuals, each multiplied by `t^{n+2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationResiduals {
    pub nodes: Vec<usize>,
    /// `n − 1` values per node.
    pub tangential: Vec<f64>,
    pub normal: Vec<f64>,
    /// `k` values per node.
    pub system: Vec<f64>,
}

impl VariationResiduals {
    pub fn max_abs(&self) -> f64 {
        self.tangential
            .iter()
            .chain(&self.normal)
            .chain(&self.system)
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Evaluates the divergence identities of the area functional with the field's
/// centered stencils.
pub fn variation_residuals(u: &GridField) -> Result<VariationResiduals, GeometryError> {
    let g = &u.grid;
    let (n, k) = (g.n, g.codim);
    let nodes = g.interior_nodes();
    if nodes.is_empty() {
        return Err(GeometryError::Stencil);
    }
    let mut out = VariationResiduals {
        nodes: nodes.clone(),
        tangential: Vec::with_capacity(nodes.len() * (n - 1)),
        normal: Vec::with_capacity(nodes.len()),
        system: Vec::with_capacity(nodes.len() * k),
    };
    for &q in &nodes {
        let (du, hess) = u.derivatives(&g.stencils(q));
        let d = variation_density(&du, &hess, n, k, g.t(g.split(q).1))?;
        out.tangential.extend(d.tangential);
        out.normal.push(d.normal);
        out.system.extend(d.system);
    }
    Ok(out)
}
