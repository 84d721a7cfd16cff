//! Experiment configuration: one JSON document with a block per stage.
//!
//! Unknown keys are rejected everywhere. Structural errors carry the JSON path
//! of the offending value; semantic checks that need several fields at once run
//! in [`ExperimentConfig::validate`] and report paths the same way.

use std::path::{Path, PathBuf};

use hypermin_core::envelope::EnvelopeConfig;
use hypermin_core::expansion::{ProblemSpec, SpecError};
use hypermin_core::fitter::FitConfig;
use hypermin_core::series::{PolyJet, Rational, MAX_DEGREE, MAX_VARS};
use hypermin_core::solver::{Grid, NewtonConfig};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::exact::Exact;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must be 1.
    pub schema_version: u32,
    /// Seed for randomized probes.
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub expand: Option<ExpandConfig>,
    #[serde(default)]
    pub solve: Option<SolveConfig>,
    #[serde(default)]
    pub fit: Option<FitBlock>,
    #[serde(default)]
    pub verify: Option<VerifyConfig>,
    #[serde(default)]
    pub envelope: Option<EnvelopeBlock>,
    #[serde(default)]
    pub pipeline: Option<PipelineConfig>,
}

/// An integer given as a JSON number or a decimal string of any length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum Integer {
    Small(i64),
    Big(String),
}

/// Coefficient `num/den` of the monomial `y^exp`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub exp: Vec<u32>,
    pub num: Integer,
    #[serde(default = "one")]
    pub den: Integer,
}

fn one() -> Integer {
    Integer::Small(1)
}

/// Parameters of the formal expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExpandConfig {
    pub n: usize,
    /// Boundary data, one list of terms per component.
    pub phi: Vec<Vec<Term>>,
    /// The undetermined coefficient at order n+1; zero when absent.
    #[serde(default)]
    pub free_coeff: Option<Vec<Vec<Term>>>,
    pub trunc_order: u32,
    pub jet_degree: u32,
    #[serde(default = "unit")]
    pub domain_radius: f64,
    #[serde(default)]
    pub log_cap: Option<u32>,
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase", tag = "kind", deny_unknown_fields)]
pub enum Boundary {
    /// Dirichlet data from the truncated expansion of the `expand` block.
    Manufactured,
    /// Rotational graph over flat boundary data with `u_t ~ slope · t^n`.
    Rotational {
        n: usize,
        slope: f64,
        #[serde(default = "one_usize")]
        codim: usize,
    },
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GridConfig {
    /// Tangential half-width.
    pub rho: f64,
    /// Nodes per tangential axis.
    pub ny: usize,
    /// Normal extent.
    pub r: f64,
    /// Normal intervals on the coarsest level.
    pub nt: usize,
    #[serde(default = "two")]
    pub gamma: f64,
}

fn two() -> f64 {
    2.0
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { rho: 0.25, ny: 9, r: 0.25, nt: 64, gamma: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SolveConfig {
    pub boundary: Boundary,
    pub grid: GridConfig,
    /// Number of levels, each doubling the normal resolution.
    pub levels: usize,
    /// Combine consecutive levels by second-order extrapolation.
    pub richardson: bool,
    pub newton: NewtonConfig,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            boundary: Boundary::Manufactured,
            grid: GridConfig::default(),
            levels: 4,
            richardson: true,
            newton: NewtonConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase", tag = "kind", deny_unknown_fields)]
pub enum FitSource {
    /// Normal lines of the solver output.
    Solve {
        /// Tangential node indices of the compared grid; the two central ones by default.
        #[serde(default)]
        stations: Option<Vec<usize>>,
    },
    /// The truncated expansion sampled at the given tangential points.
    Series {
        #[serde(default)]
        points: Option<Vec<Vec<f64>>>,
        #[serde(default = "quarter")]
        radius: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
}

fn quarter() -> f64 {
    0.25
}

fn default_samples() -> usize {
    240
}

impl Default for FitSource {
    fn default() -> Self {
        FitSource::Solve { stations: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct FitBlock {
    pub source: FitSource,
    pub config: FitConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub verticality_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { verticality_tol: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Bound on the fitted-versus-formal gap over coefficients that do not
    /// depend on the free coefficient.
    pub tolerance: f64,
    pub verticality_tol: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { tolerance: 1e-3, verticality_tol: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase", tag = "kind", deny_unknown_fields)]
pub enum Geometry {
    Circle {
        #[serde(default = "two_usize")]
        ambient: usize,
        #[serde(default = "unit")]
        radius: f64,
        #[serde(default = "circle_samples")]
        samples: usize,
    },
    Line {
        #[serde(default = "two_usize")]
        ambient: usize,
        #[serde(default = "unit")]
        half_length: f64,
        #[serde(default = "line_samples")]
        samples: usize,
    },
    /// The curve `x₂ = c |x₁|^{1+α}`.
    Crease {
        #[serde(default = "two_usize")]
        ambient: usize,
        #[serde(default = "unit")]
        c: f64,
        #[serde(default = "half")]
        alpha: f64,
        #[serde(default = "unit")]
        half_length: f64,
        #[serde(default = "crease_samples")]
        samples: usize,
    },
    /// CSV with a header row: point coordinates, then the normal frame row by row.
    Cloud {
        path: PathBuf,
        ambient: usize,
        intrinsic: usize,
        alpha: f64,
        resolution: f64,
    },
}

fn two_usize() -> usize {
    2
}
fn half() -> f64 {
    0.5
}
fn circle_samples() -> usize {
    720
}
fn line_samples() -> usize {
    401
}
fn crease_samples() -> usize {
    2001
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry::Crease { ambient: 2, c: 1.0, alpha: 0.5, half_length: 1.0, samples: crease_samples() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct EnvelopeBlock {
    pub geometry: Geometry,
    /// Chart parameter of the base point `Q`; ignored for clouds.
    pub at: Option<f64>,
    /// Sample index of `Q`; takes precedence over `at`.
    pub sample: Option<usize>,
    /// Radii for `δ(Q, r)`.
    pub r_samples: Vec<f64>,
    /// Signed normal offsets from `Q` for the envelope edge.
    pub offsets: Option<Vec<f64>>,
    /// Deficits below this count as zero.
    pub noise: f64,
    pub search: EnvelopeConfig,
    /// Points of the upper half-space tested for membership in the envelope.
    pub queries: Vec<Vec<f64>>,
    /// Random `(Q, r)` pairs checked for `δ ≤ r`.
    pub property_samples: usize,
}

impl Default for EnvelopeBlock {
    fn default() -> Self {
        EnvelopeBlock {
            geometry: Geometry::default(),
            at: None,
            sample: None,
            r_samples: geometric(0.01, 0.1, 8),
            offsets: None,
            noise: 1e-9,
            search: EnvelopeConfig::default(),
            queries: Vec::new(),
            property_samples: 64,
        }
    }
}

pub fn geometric(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|j| lo * (hi / lo).powf(j as f64 / (count - 1) as f64)).collect()
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::config("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_slice(&bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            // For unknown keys the path already ends in the rejected key.
            CliError::config(e.path().to_string(), e.inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that need more than one field.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(
                "schemaVersion",
                format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        if let Some(e) = &self.expand {
            e.problem::<Rational>()?;
        }
        if let Some(s) = &self.solve {
            s.validate(self.expand.as_ref())?;
        }
        if let Some(f) = &self.fit {
            f.validate()?;
        }
        if let Some(e) = &self.envelope {
            e.validate()?;
        }
        Ok(())
    }
}

fn parse_integer(v: &Integer, path: &str) -> Result<String, CliError> {
    match v {
        Integer::Small(x) => Ok(x.to_string()),
        Integer::Big(s) => {
            let body = s.strip_prefix('-').unwrap_or(s);
            if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
                return Err(CliError::config(path, format!("`{s}` is not a decimal integer")));
            }
            Ok(s.clone())
        }
    }
}

impl Term {
    pub fn rational(&self, path: &str) -> Result<Rational, CliError> {
        let num = parse_integer(&self.num, &format!("{path}.num"))?;
        let den = parse_integer(&self.den, &format!("{path}.den"))?;
        if den.trim_start_matches('-').trim_start_matches('0').is_empty() {
            return Err(CliError::config(format!("{path}.den"), "denominator is zero"));
        }
        format!("{num}/{den}")
            .parse::<Rational>()
            .map_err(|e| CliError::config(path, format!("bad rational: {e}")))
    }
}

fn spec_path(e: &SpecError) -> &'static str {
    match e {
        SpecError::Dimension(_) => "expand.n",
        SpecError::Codim => "expand.phi",
        SpecError::TruncOrder { .. } => "expand.truncOrder",
        SpecError::Radius => "expand.domainRadius",
        SpecError::ComponentCount { field, .. } | SpecError::JetShape { field, .. } => {
            if *field == "phi" {
                "expand.phi"
            } else {
                "expand.freeCoeff"
            }
        }
    }
}

impl ExpandConfig {
    fn jets<S: Exact>(&self, lists: &[Vec<Term>], field: &str) -> Result<Vec<PolyJet<S>>, CliError> {
        let nv = self.n.saturating_sub(1);
        lists
            .iter()
            .enumerate()
            .map(|(s, terms)| {
                let mut out = Vec::with_capacity(terms.len());
                for (p, term) in terms.iter().enumerate() {
                    let path = format!("expand.{field}[{s}][{p}]");
                    if term.exp.len() != nv {
                        return Err(CliError::config(
                            format!("{path}.exp"),
                            format!("expected {nv} exponents (one per tangential variable), got {}", term.exp.len()),
                        ));
                    }
                    let degree: u32 = term.exp.iter().sum();
                    if degree > self.jet_degree {
                        return Err(CliError::config(
                            format!("{path}.exp"),
                            format!("monomial degree {degree} exceeds jetDegree = {}", self.jet_degree),
                        ));
                    }
                    out.push((term.exp.clone(), S::from_rational(&term.rational(&path)?)));
                }
                PolyJet::from_terms(nv, self.jet_degree, out)
                    .map_err(|e| CliError::config(format!("expand.{field}[{s}]"), e.to_string()))
            })
            .collect()
    }

    /// The problem in scalar type `S`, validated.
    pub fn problem<S: Exact>(&self) -> Result<ProblemSpec<S>, CliError> {
        if self.n < 2 {
            return Err(CliError::config("expand.n", SpecError::Dimension(self.n).to_string()));
        }
        if self.n - 1 > MAX_VARS {
            return Err(CliError::config("expand.n", format!("at most {} tangential variables are supported", MAX_VARS)));
        }
        if self.jet_degree > MAX_DEGREE {
            return Err(CliError::config("expand.jetDegree", format!("jetDegree must be ≤ {MAX_DEGREE}")));
        }
        if self.phi.is_empty() {
            return Err(CliError::config("expand.phi", SpecError::Codim.to_string()));
        }
        let phi = self.jets::<S>(&self.phi, "phi")?;
        let mut spec = ProblemSpec::new(self.n, phi, self.trunc_order, self.jet_degree);
        if let Some(c) = &self.free_coeff {
            spec = spec.with_free_coeff(self.jets::<S>(c, "freeCoeff")?);
        }
        spec.domain_radius = self.domain_radius;
        spec.log_cap = self.log_cap;
        spec.validate().map_err(|e| CliError::config(spec_path(&e), e.to_string()))?;
        Ok(spec)
    }
}

impl SolveConfig {
    /// Surface dimension and codimension of the solve.
    pub fn dims(&self, expand: Option<&ExpandConfig>) -> Result<(usize, usize), CliError> {
        match &self.boundary {
            Boundary::Manufactured => expand
                .map(|e| (e.n, e.phi.len()))
                .ok_or_else(|| CliError::config("solve.boundary", "a manufactured boundary needs an expand block")),
            Boundary::Rotational { n, codim, .. } => Ok((*n, *codim)),
        }
    }

    pub fn level_nt(&self) -> Vec<usize> {
        (0..self.levels).map(|l| self.grid.nt << l).collect()
    }

    pub fn grid(&self, n: usize, codim: usize, nt: usize) -> Result<Grid, CliError> {
        let g = &self.grid;
        Grid::new(n, codim, g.rho, g.ny, g.r, nt, g.gamma).map_err(|e| CliError::config("solve.grid", e.to_string()))
    }

    pub fn validate(&self, expand: Option<&ExpandConfig>) -> Result<(), CliError> {
        let (n, codim) = self.dims(expand)?;
        if let Boundary::Rotational { slope, .. } = &self.boundary {
            if !slope.is_finite() {
                return Err(CliError::config("solve.boundary.slope", "slope must be finite"));
            }
            if n < 2 {
                return Err(CliError::config("solve.boundary.n", "n must be ≥ 2"));
            }
        }
        if self.levels < 3 {
            return Err(CliError::config("solve.levels", "a refinement study needs at least three levels"));
        }
        if self.levels > 12 {
            return Err(CliError::config("solve.levels", "at most 12 levels"));
        }
        self.grid(n, codim, self.grid.nt)?;
        Ok(())
    }
}

impl FitBlock {
    fn validate(&self) -> Result<(), CliError> {
        if let Some((lo, hi)) = self.config.window {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(CliError::config("fit.config.window", format!("window [{lo}, {hi}] is invalid")));
            }
        }
        if self.config.max_order == 0 {
            return Err(CliError::config("fit.config.maxOrder", "maxOrder must be ≥ 1"));
        }
        if let FitSource::Series { radius, samples, .. } = &self.source {
            if !(*radius > 0.0 && radius.is_finite()) {
                return Err(CliError::config("fit.source.radius", "radius must be positive"));
            }
            if *samples < 2 {
                return Err(CliError::config("fit.source.samples", "need at least two samples"));
            }
        }
        Ok(())
    }
}

impl EnvelopeBlock {
    fn validate(&self) -> Result<(), CliError> {
        if self.r_samples.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(CliError::config("envelope.rSamples", "radii must be positive and finite"));
        }
        if self.offsets.as_ref().is_some_and(|o| o.iter().any(|r| !r.is_finite())) {
            return Err(CliError::config("envelope.offsets", "offsets must be finite"));
        }
        if !(self.noise >= 0.0) {
            return Err(CliError::config("envelope.noise", "noise must be ≥ 0"));
        }
        let ambient = match &self.geometry {
            Geometry::Circle { ambient, .. } | Geometry::Line { ambient, .. } | Geometry::Crease { ambient, .. } => *ambient,
            Geometry::Cloud { ambient, .. } => *ambient,
        };
        for (p, q) in self.queries.iter().enumerate() {
            if q.len() != ambient + 1 {
                return Err(CliError::config(
                    format!("envelope.queries[{p}]"),
                    format!("expected {} coordinates (boundary point and height)", ambient + 1),
                ));
            }
        }
        Ok(())
    }
}
