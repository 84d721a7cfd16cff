//! Formal boundary expansion `u = φ + Σ c_{i,j}(y') t^i (log t)^j` of a minimal
//! graph, built order by order, with its structural checks and diagnostics.

mod checks;
mod growth;
mod ode_extract;
mod recursion;

pub use checks::{residual_check, structure_check, CheckOutcome, ResidualReport, StructureReport};
pub use growth::{convergence_diagnostics, GrowthReport};
pub use ode_extract::{ode_integral_extract, OdeExtract, OdeExtractConfig};
pub use recursion::{expand, expand_at_station, fast_residual};

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::geometry::GeometryError;
use crate::series::{PolyJet, Scalar, SeriesError, VectorLogSeries};

/// Input of the recursion.
///
/// `phi` and `free_coeff` hold one jet per component of `u`; being jets they
/// carry no `t` or `log t` dependence by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec<S: Scalar> {
    /// Surface dimension `n ≥ 2`.
    pub n: usize,
    /// Codimension `k = m − n ≥ 1`.
    pub codim: usize,
    pub phi: Vec<PolyJet<S>>,
    /// The undetermined coefficient `c_{n+1,0}`.
    pub free_coeff: Vec<PolyJet<S>>,
    /// Truncation order `K ≥ n + 1`.
    pub trunc_order: u32,
    /// Jet degree `D` in the tangential variables.
    pub jet_degree: u32,
    pub domain_radius: f64,
    /// Cap on stored log powers; `None` means `2⌈K/n⌉`.
    pub log_cap: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error("n must be ≥ 2 (got {0})")]
    Dimension(usize),
    #[error("codim must be ≥ 1")]
    Codim,
    #[error("truncOrder must be ≥ n+1 (got {k} with n = {n})")]
    TruncOrder { k: u32, n: usize },
    #[error("domainRadius must be > 0")]
    Radius,
    #[error("{field} has {got} components, expected codim = {codim}")]
    ComponentCount { field: &'static str, got: usize, codim: usize },
    #[error("{field} jets must have {num_vars} variables and degree {degree}")]
    JetShape { field: &'static str, num_vars: usize, degree: u32 },
}

impl<S: Scalar> ProblemSpec<S> {
    /// Spec with zero free coefficient and the default log cap.
    pub fn new(n: usize, phi: Vec<PolyJet<S>>, trunc_order: u32, jet_degree: u32) -> Self {
        let codim = phi.len();
        let free_coeff = (0..codim).map(|_| PolyJet::zero(n.saturating_sub(1), jet_degree)).collect();
        ProblemSpec {
            n,
            codim,
            phi,
            free_coeff,
            trunc_order,
            jet_degree,
            domain_radius: 1.0,
            log_cap: None,
        }
    }

    pub fn with_free_coeff(mut self, c: Vec<PolyJet<S>>) -> Self {
        self.free_coeff = c;
        self
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.n < 2 {
            return Err(SpecError::Dimension(self.n));
        }
        if self.codim < 1 {
            return Err(SpecError::Codim);
        }
        if (self.trunc_order as usize) < self.n + 1 {
            return Err(SpecError::TruncOrder { k: self.trunc_order, n: self.n });
        }
        if !(self.domain_radius > 0.0) {
            return Err(SpecError::Radius);
        }
        for (field, jets) in [("phi", &self.phi), ("freeCoeff", &self.free_coeff)] {
            if jets.len() != self.codim {
                return Err(SpecError::ComponentCount { field, got: jets.len(), codim: self.codim });
            }
            if jets
                .iter()
                .any(|j| j.num_vars() != self.n - 1 || j.max_degree() != self.jet_degree)
            {
                return Err(SpecError::JetShape { field, num_vars: self.n - 1, degree: self.jet_degree });
            }
        }
        Ok(())
    }

    pub fn default_log_cap(&self) -> u32 {
        let k = self.trunc_order as usize;
        (2 * k.div_ceil(self.n)) as u32
    }
}

/// Output of [`expand`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionResult<S: Scalar> {
    pub spec: ProblemSpec<S>,
    /// The partial sum `T_K`.
    pub u: VectorLogSeries<S>,
    /// Every solved slot `(i, j)` with `1 ≤ i ≤ K`: all `j = 0` slots and every
    /// nonzero log slot; one jet per component.
    pub coeffs: BTreeMap<(u32, u32), Vec<PolyJet<S>>>,
    /// `t²`-scaled residual of `T_K`, truncated at order `K + 1`.
    pub residual: VectorLogSeries<S>,
    /// Log cap in force at the end (raised automatically on overflow).
    pub log_cap: u32,
    pub structure: StructureReport,
}

impl<S: Scalar> ExpansionResult<S> {
    pub fn coeff(&self, i: u32, j: u32) -> Option<&[PolyJet<S>]> {
        self.coeffs.get(&(i, j)).map(|v| v.as_slice())
    }

    /// Value of component `s` of `c_{i,j}` at `y'`; zero for absent slots.
    pub fn coeff_value(&self, i: u32, j: u32, s: usize, y: &[f64]) -> f64 {
        self.coeffs.get(&(i, j)).map(|v| v[s].eval(y)).unwrap_or(0.0)
    }

    /// Constant term of component `s` of `c_{i,j}` (its exact value at `y' = 0`).
    pub fn coeff_at_origin(&self, i: u32, j: u32, s: usize) -> S {
        self.coeffs
            .get(&(i, j))
            .map(|v| v[s].constant_term())
            .unwrap_or_else(S::zero)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExpansionError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("log cap overflow persisted after raising the cap to {cap}")]
    LogCap { cap: u32 },
    #[error("internal inconsistency at slot ({i}, {j}): {detail}")]
    Inconsistent { i: u32, j: u32, detail: String },
    #[error("residual frontier violated at ({i}, {j}) in component {s}: {jet}")]
    Frontier { i: u32, j: u32, s: usize, jet: String },
    #[error("forcing is not integrable against ζ^{{-1}} near 0")]
    Divergent,
}
