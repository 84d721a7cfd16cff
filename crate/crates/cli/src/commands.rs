//! Stage runners. Each stage writes its own artifacts and hands its results to
//! the next one.

use std::time::Instant;

use hypermin_core::envelope::{
    calibrate_offset_constant, delta_q_r, envelope_exponent_fit, envelope_offset_exponent, in_w, normal_offset,
    BoundaryManifold, DeficitFit, Distance, Membership, OffsetFit,
};
use hypermin_core::expansion::{
    convergence_diagnostics, expand, residual_check, ExpansionResult, GrowthReport, ResidualReport, StructureReport,
};
use hypermin_core::fitter::{
    compare_fit_to_formal, fit_expansion, geometric_samples, stations_from_refinement, stations_from_series,
    verticality_check, Comparison, ExpansionFit, FitConfig, Station, VerticalityReport,
};
use hypermin_core::geometry::variation_residuals;
use hypermin_core::mesh::NodeKind;
use hypermin_core::series::{PolyJet, VectorLogSeries};
use hypermin_core::solver::{
    newton_solve, refine_study, richardson_extrapolate, rotational_solve, rotational_value, ConvergenceTable, Grid,
    GridField, SolveReport,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{geometric, Boundary, EnvelopeBlock, ExperimentConfig, FitBlock, FitSource, Geometry, SCHEMA_VERSION};
use crate::error::CliError;
use crate::exact::Exact;
use crate::formats::{flag, num, OutDir, SeriesDoc};

/// State shared by the stages of one invocation.
pub struct Context {
    pub cfg: ExperimentConfig,
    pub out: OutDir,
    pub threads: usize,
    pub timings: Vec<(String, f64)>,
    pool: Option<rayon::ThreadPool>,
}

impl Context {
    pub fn new(cfg: ExperimentConfig, out: OutDir, threads: usize) -> Self {
        let pool = (threads > 1).then(|| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool")
        });
        Context { cfg, out, threads: threads.max(1), timings: Vec::new(), pool }
    }

    /// Maps in order; parallel when more than one thread was requested.
    pub fn map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(usize, &T) -> R + Sync + Send) -> Vec<R> {
        match &self.pool {
            None => items.iter().enumerate().map(|(p, x)| f(p, x)).collect(),
            Some(pool) => pool.install(|| items.par_iter().enumerate().map(|(p, x)| f(p, x)).collect()),
        }
    }

    fn timed<R>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> R) -> R {
        log::info!("{stage}: start");
        let start = Instant::now();
        let r = f(self);
        let ms = start.elapsed().as_secs_f64() * 1e3;
        log::info!("{stage}: {ms:.1} ms");
        self.timings.push((stage.to_string(), ms));
        r
    }
}

// ---------------------------------------------------------------- expand

pub struct Expanded<S: Exact> {
    pub res: ExpansionResult<S>,
    pub residual: ResidualReport,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ExpansionDoc<'a> {
    schema_version: u32,
    scalar: &'static str,
    n: usize,
    codim: usize,
    trunc_order: u32,
    jet_degree: u32,
    log_cap: u32,
    series: Vec<SeriesDoc>,
    residual_series: Vec<SeriesDoc>,
    structure: &'a StructureReport,
    residual_check: &'a ResidualReport,
    growth: &'a GrowthReport,
}

fn scalar_name<S: Exact>() -> &'static str {
    match S::MODE {
        hypermin_core::series::ScalarMode::ExactRational => "rational",
        hypermin_core::series::ScalarMode::Float64 => "float",
    }
}

pub fn run_expand<S: Exact>(ctx: &mut Context) -> Result<Expanded<S>, CliError> {
    let block = ctx.cfg.expand.clone().ok_or_else(|| CliError::config("expand", "missing expand block"))?;
    let spec = block.problem::<S>()?;
    let (res, residual) = ctx.timed("expand", |_| -> Result<_, CliError> {
        let res = expand(&spec).map_err(|e| CliError::module("expand", e))?;
        let residual = residual_check(&res).map_err(|e| CliError::module("expand", e))?;
        Ok((res, residual))
    })?;
    let growth = convergence_diagnostics(&res, spec.domain_radius);
    let doc = ExpansionDoc {
        schema_version: SCHEMA_VERSION,
        scalar: scalar_name::<S>(),
        n: spec.n,
        codim: spec.codim,
        trunc_order: spec.trunc_order,
        jet_degree: spec.jet_degree,
        log_cap: res.log_cap,
        series: res.u.components().iter().map(SeriesDoc::new).collect(),
        residual_series: res.residual.components().iter().map(SeriesDoc::new).collect(),
        structure: &res.structure,
        residual_check: &residual,
        growth: &growth,
    };
    ctx.out.json("expansion.json", &doc)?;
    let mut rows = Vec::new();
    for (&(i, j), jets) in &res.coeffs {
        for (s, jet) in jets.iter().enumerate() {
            rows.push(vec![
                i.to_string(),
                j.to_string(),
                s.to_string(),
                num(jet.max_abs()),
                num(jet.weighted_l1(spec.domain_radius)),
                num(jet.constant_term().to_f64()),
            ]);
        }
    }
    ctx.out.table("coefficients", &["i", "j", "component", "max_abs", "weighted_l1", "at_origin"], &rows)?;
    Ok(Expanded { res, residual })
}

// ---------------------------------------------------------------- solve

/// Boundary data of a solve in float form.
pub struct Dirichlet {
    codim: usize,
    phi: Vec<PolyJet<f64>>,
    closure: Option<VectorLogSeries<f64>>,
}

impl Dirichlet {
    pub fn phi(&self, y: &[f64]) -> Vec<f64> {
        if self.phi.is_empty() {
            vec![0.0; self.codim]
        } else {
            self.phi.iter().map(|p| p.eval(y)).collect()
        }
    }
}

pub struct Solved {
    pub boundary: Dirichlet,
    pub levels: Vec<GridField>,
    /// Extrapolated fields, one per level after the first, on the coarser grid.
    pub extrapolated: Vec<GridField>,
    pub richardson: bool,
}

impl Solved {
    /// The two finest comparable fields, coarse first.
    pub fn pair(&self) -> (&GridField, &GridField) {
        let f = if self.richardson { &self.extrapolated } else { &self.levels };
        (&f[f.len() - 2], &f[f.len() - 1])
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct LevelDoc {
    nt: usize,
    report: SolveReport,
    /// Max interior nodal deviation from the reference profile.
    max_error: f64,
    /// Largest discrete first-variation residual.
    variation_residual: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct RichardsonDoc {
    nt: usize,
    max_error: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SolveDoc<'a> {
    schema_version: u32,
    boundary: &'a Boundary,
    levels: Vec<LevelDoc>,
    convergence: ConvergenceTable,
    richardson: Vec<RichardsonDoc>,
    richardson_convergence: Option<ConvergenceTable>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct GridDoc<'a> {
    schema_version: u32,
    grid: &'a Grid,
    levels: Vec<usize>,
    nodes: usize,
    nodes_file: &'static str,
    values_file: &'static str,
}

fn max_interior_error(u: &GridField, reference: &(dyn Fn(&[f64], f64) -> Vec<f64> + Sync)) -> f64 {
    let g = &u.grid;
    let mut err = 0.0f64;
    for q in g.interior_nodes() {
        let (tang, j) = g.split(q);
        let want = reference(&g.y_of(tang), g.t(j));
        for (a, b) in u.at(q).iter().zip(&want) {
            err = err.max((a - b).abs());
        }
    }
    err
}

fn kind_name(k: NodeKind) -> &'static str {
    match k {
        NodeKind::Bottom => "bottom",
        NodeKind::Top => "top",
        NodeKind::Lateral => "lateral",
        NodeKind::Interior => "interior",
    }
}

pub fn run_solve<S: Exact>(ctx: &mut Context, expanded: Option<&Expanded<S>>) -> Result<Solved, CliError> {
    let block = ctx.cfg.solve.clone().unwrap_or_default();
    let (n, codim) = block.dims(ctx.cfg.expand.as_ref())?;
    let nts = block.level_nt();
    let grids = nts.iter().map(|&nt| block.grid(n, codim, nt)).collect::<Result<Vec<_>, _>>()?;
    let boundary = match &block.boundary {
        Boundary::Manufactured => {
            let e = expanded.ok_or_else(|| CliError::config("solve.boundary", "a manufactured boundary needs an expand block"))?;
            Dirichlet {
                codim,
                phi: e.res.spec.phi.iter().map(|p| p.to_f64()).collect(),
                closure: Some(e.res.u.to_f64()),
            }
        }
        Boundary::Rotational { .. } => Dirichlet { codim, phi: Vec::new(), closure: None },
    };
    let reference = |y: &[f64], t: f64| -> Vec<f64> {
        match (&block.boundary, &boundary.closure) {
            (_, Some(u)) => u.eval(y, t).unwrap_or_else(|_| boundary.phi(y)),
            (Boundary::Rotational { n, slope, .. }, None) => {
                vec![rotational_value(*n, *slope, t).unwrap_or(f64::NAN); codim]
            }
            _ => unreachable!("manufactured boundaries carry a closure"),
        }
    };
    let solved = ctx.timed("solve", |ctx| {
        ctx.map(&grids, |_, g| -> Result<_, CliError> {
            let (u, report) = match &block.boundary {
                Boundary::Manufactured => newton_solve(g, &|y| boundary.phi(y), &reference, None, &block.newton),
                Boundary::Rotational { slope, .. } => rotational_solve(g, *slope, &block.newton).map(|(u, r, _)| (u, r)),
            }
            .map_err(|e| CliError::module("solve", e))?;
            let vr = variation_residuals(&u).map_err(|e| CliError::module("solve", e))?.max_abs();
            let err = max_interior_error(&u, &reference);
            Ok((u, report, err, vr))
        })
    });
    let mut levels = Vec::new();
    let mut docs = Vec::new();
    for (sol, &nt) in solved.into_iter().zip(&nts) {
        let (u, report, max_error, variation_residual) = sol?;
        levels.push(u);
        docs.push(LevelDoc { nt, report, max_error, variation_residual });
    }
    let mut extrapolated = Vec::new();
    let mut rich_docs = Vec::new();
    for l in 1..levels.len() {
        let r = richardson_extrapolate(&levels[l], &levels[l - 1], 2.0).map_err(|e| CliError::module("solve", e))?;
        rich_docs.push(RichardsonDoc { nt: nts[l], max_error: max_interior_error(&r, &reference) });
        extrapolated.push(r);
    }
    let errors: Vec<f64> = docs.iter().map(|d| d.max_error).collect();
    let convergence = refine_study(&nts, |nt| Ok(errors[nts.iter().position(|&x| x == nt).unwrap_or(0)]))
        .map_err(|e| CliError::module("solve", e))?;
    let rnts: Vec<usize> = rich_docs.iter().map(|d| d.nt).collect();
    let richardson_convergence = (rnts.len() >= 3)
        .then(|| refine_study(&rnts, |nt| Ok(rich_docs[rnts.iter().position(|&x| x == nt).unwrap_or(0)].max_error)))
        .transpose()
        .map_err(|e| CliError::module("solve", e))?;

    let finest = levels.last().expect("at least three levels");
    let g = &finest.grid;
    ctx.out.json(
        "grid.json",
        &GridDoc { schema_version: SCHEMA_VERSION, grid: g, levels: nts.clone(), nodes: g.num_nodes(), nodes_file: "nodes.csv", values_file: "values.csv" },
    )?;
    let mut header: Vec<String> = vec!["node".into(), "tang".into(), "j".into(), "kind".into()];
    header.extend((0..n - 1).map(|a| format!("y{a}")));
    header.push("t".into());
    let mut node_rows = Vec::with_capacity(g.num_nodes());
    let mut value_rows = Vec::with_capacity(g.num_nodes());
    for q in 0..g.num_nodes() {
        let (tang, j) = g.split(q);
        let mut row = vec![q.to_string(), tang.to_string(), j.to_string(), kind_name(g.kind(q)).to_string()];
        row.extend(g.y_of(tang).into_iter().map(num));
        row.push(num(g.t(j)));
        node_rows.push(row);
        let mut row = vec![q.to_string()];
        row.extend(finest.at(q).iter().map(|&v| num(v)));
        value_rows.push(row);
    }
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    ctx.out.csv("nodes.csv", &h, &node_rows)?;
    let mut vh: Vec<String> = vec!["node".into()];
    vh.extend((0..codim).map(|s| format!("u{s}")));
    ctx.out.csv("values.csv", &vh.iter().map(String::as_str).collect::<Vec<_>>(), &value_rows)?;

    let rows: Vec<Vec<String>> = docs
        .iter()
        .enumerate()
        .map(|(l, d)| {
            let rich = if l == 0 { "nan".to_string() } else { num(rich_docs[l - 1].max_error) };
            vec![d.nt.to_string(), num(1.0 / d.nt as f64), num(d.max_error), rich, num(d.report.final_residual)]
        })
        .collect();
    ctx.out.table("convergence", &["nt", "h", "max_error", "richardson_error", "final_residual"], &rows)?;
    ctx.out.json(
        "solve_report.json",
        &SolveDoc {
            schema_version: SCHEMA_VERSION,
            boundary: &block.boundary,
            levels: docs,
            convergence,
            richardson: rich_docs,
            richardson_convergence,
        },
    )?;
    Ok(Solved { boundary, levels, extrapolated, richardson: block.richardson })
}

// ---------------------------------------------------------------- fit

pub struct Fitted {
    pub fit: ExpansionFit,
    pub verticality: VerticalityReport,
    pub comparison: Option<Comparison>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct FitDoc<'a> {
    schema_version: u32,
    source: &'a FitSource,
    config: &'a FitConfig,
    fit: &'a ExpansionFit,
    verticality: &'a VerticalityReport,
    comparison: Option<&'a Comparison>,
}

/// Fits each station on its own with the shared window and merges in order.
fn fit_stations(ctx: &Context, n: usize, stations: &[Station], cfg: &FitConfig) -> Result<ExpansionFit, CliError> {
    if stations.is_empty() {
        return Err(CliError::config("fit.source", "no stations to fit"));
    }
    let cfg = FitConfig { window: Some(cfg.resolve_window(stations)), ..cfg.clone() };
    let parts = ctx.map(stations, |si, st| {
        fit_expansion(n, std::slice::from_ref(st), &cfg).map_err(|e| {
            let CliError::Module { module, kind, message } = CliError::module("fit", e) else { unreachable!() };
            CliError::Module { module, kind, message: format!("station {si}: {message}") }
        })
    });
    let mut merged: Option<ExpansionFit> = None;
    for p in parts {
        let p = p?;
        match &mut merged {
            None => merged = Some(p),
            Some(m) => {
                m.residual_norm = m.residual_norm.max(p.residual_norm);
                m.stations.extend(p.stations);
            }
        }
    }
    Ok(merged.expect("at least one station"))
}

pub fn run_fit<S: Exact>(
    ctx: &mut Context,
    expanded: Option<&Expanded<S>>,
    solved: Option<&Solved>,
    verticality_tol: f64,
) -> Result<Fitted, CliError> {
    let block = ctx.cfg.fit.clone().unwrap_or_default();
    let FitBlock { source, config } = &block;
    let (n, stations, cfg) = match source {
        FitSource::Solve { stations } => {
            let solved = solved.ok_or_else(|| CliError::config("fit.source", "a solve source needs the solve stage"))?;
            let (coarse, fine) = solved.pair();
            let count = coarse.grid.tangential_count();
            let tangs = stations.clone().unwrap_or_else(|| vec![count / 2, (count / 2 + 1).min(count - 1)]);
            if let Some(p) = tangs.iter().position(|&t| t >= count) {
                return Err(CliError::config(
                    format!("fit.source.stations[{p}]"),
                    format!("tangential index {} outside 0..{count}", tangs[p]),
                ));
            }
            let st = stations_from_refinement(fine, coarse, &|y| solved.boundary.phi(y), &tangs)
                .map_err(|e| CliError::module("fit", e))?;
            (coarse.grid.n, st, config.clone())
        }
        FitSource::Series { points, radius, samples } => {
            let e = expanded.ok_or_else(|| CliError::config("fit.source", "a series source needs an expand block"))?;
            let n = e.res.spec.n;
            let points = points.clone().unwrap_or_else(|| vec![vec![0.0; n - 1]]);
            if let Some(p) = points.iter().position(|y| y.len() != n - 1) {
                return Err(CliError::config(format!("fit.source.points[{p}]"), format!("expected {} coordinates", n - 1)));
            }
            let window = config.window.unwrap_or((radius / 64.0, radius / 4.0));
            let t = geometric_samples(window.0, window.1, *samples);
            let u = e.res.u.to_f64();
            (n, stations_from_series(&u, &points, &t), FitConfig { window: Some(window), ..config.clone() })
        }
    };
    let fit = ctx.timed("fit", |ctx| fit_stations(ctx, n, &stations, &cfg))?;
    let verticality = verticality_check(&fit, verticality_tol);
    let comparison = match (solved.map(|s| s.boundary.closure.is_some()), expanded) {
        (Some(false), _) | (_, None) => None,
        (_, Some(e)) => Some(compare_fit_to_formal(&fit, &e.res, cfg.max_order).map_err(|e| CliError::module("fit", e))?),
    };
    ctx.out.json(
        "fit.json",
        &FitDoc {
            schema_version: SCHEMA_VERSION,
            source,
            config: &cfg,
            fit: &fit,
            verticality: &verticality,
            comparison: comparison.as_ref(),
        },
    )?;
    let mut header: Vec<String> = vec!["station".into()];
    header.extend((0..n - 1).map(|a| format!("y{a}")));
    for h in ["i", "j", "component", "value", "std_err", "peeled", "window_shift", "uncertainty", "significant"] {
        header.push(h.into());
    }
    let mut rows = Vec::new();
    for (si, st) in fit.stations.iter().enumerate() {
        for c in &st.coefficients {
            let mut row = vec![si.to_string()];
            row.extend(st.y.iter().map(|&v| num(v)));
            row.extend([
                c.i.to_string(),
                c.j.to_string(),
                c.component.to_string(),
                num(c.value),
                num(c.std_err),
                num(c.peeled),
                num(c.window_shift.unwrap_or(f64::NAN)),
                num(c.uncertainty.unwrap_or(f64::NAN)),
                flag(c.significant),
            ]);
            rows.push(row);
        }
    }
    ctx.out.table("fit_coefficients", &header.iter().map(String::as_str).collect::<Vec<_>>(), &rows)?;
    if let Some(cmp) = &comparison {
        let rows: Vec<Vec<String>> = cmp
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.station.to_string(),
                    r.i.to_string(),
                    r.j.to_string(),
                    r.component.to_string(),
                    num(r.fitted),
                    num(r.std_err),
                    num(r.formal),
                    num(r.abs_err),
                    num(r.rel_err),
                    flag(r.depends_on_free),
                ]
            })
            .collect();
        ctx.out.csv(
            "comparison.csv",
            &["station", "i", "j", "component", "fitted", "std_err", "formal", "abs_err", "rel_err", "depends_on_free"],
            &rows,
        )?;
    }
    Ok(Fitted { fit, verticality, comparison })
}

// ---------------------------------------------------------------- verify

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Checks {
    residual: bool,
    structure: bool,
    verticality: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct VerifyDoc<'a> {
    schema_version: u32,
    residual: &'a ResidualReport,
    structure: &'a StructureReport,
    verticality: &'a VerticalityReport,
    checks: Checks,
    pass: bool,
}

pub fn run_verify<S: Exact>(ctx: &mut Context) -> Result<(), CliError> {
    let tol = ctx.cfg.verify.clone().unwrap_or_default().verticality_tol;
    let expanded = run_expand::<S>(ctx)?;
    let block = ctx.cfg.fit.get_or_insert_with(|| FitBlock {
        source: FitSource::Series { points: None, radius: 0.25, samples: 240 },
        config: FitConfig::default(),
    });
    let solved = match block.source {
        FitSource::Solve { .. } => Some(run_solve(ctx, Some(&expanded))?),
        FitSource::Series { .. } => None,
    };
    let fitted = run_fit(ctx, Some(&expanded), solved.as_ref(), tol)?;
    let checks = Checks {
        residual: expanded.residual.frontier_clean && expanded.residual.routes_agree,
        structure: expanded.res.structure.all_passed(),
        verticality: fitted.verticality.pass,
    };
    let pass = checks.residual && checks.structure && checks.verticality;
    ctx.out.json(
        "verify.json",
        &VerifyDoc {
            schema_version: SCHEMA_VERSION,
            residual: &expanded.residual,
            structure: &expanded.res.structure,
            verticality: &fitted.verticality,
            checks,
            pass,
        },
    )?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Check { module: "verify", message: "one or more checks failed; see verify.json".into() })
    }
}

// ---------------------------------------------------------------- pipeline

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct PipelineDoc {
    schema_version: u32,
    n: usize,
    codim: usize,
    tolerance: f64,
    rows_checked: usize,
    max_abs_err: f64,
    max_rel_err: f64,
    verticality: f64,
    verticality_tol: f64,
    log_detected: bool,
    formal_first_log: Option<(u32, u32)>,
    pass: bool,
}

pub fn run_pipeline<S: Exact>(ctx: &mut Context) -> Result<(), CliError> {
    let pcfg = ctx.cfg.pipeline.clone().unwrap_or_default();
    if matches!(ctx.cfg.solve.as_ref().map(|s| &s.boundary), Some(Boundary::Rotational { .. })) {
        return Err(CliError::config("solve.boundary", "the pipeline needs a manufactured boundary"));
    }
    if matches!(ctx.cfg.fit.as_ref().map(|f| &f.source), Some(FitSource::Series { .. })) {
        return Err(CliError::config("fit.source", "the pipeline fits solver output"));
    }
    let expanded = run_expand::<S>(ctx)?;
    let solved = run_solve(ctx, Some(&expanded))?;
    let fitted = run_fit(ctx, Some(&expanded), Some(&solved), pcfg.verticality_tol)?;
    let cmp = fitted.comparison.as_ref().expect("manufactured solve is compared");
    let rows_checked = cmp.rows.iter().filter(|r| !r.depends_on_free).count();
    let pass = cmp.max_abs_err <= pcfg.tolerance && fitted.verticality.pass;
    ctx.out.json(
        "pipeline.json",
        &PipelineDoc {
            schema_version: SCHEMA_VERSION,
            n: expanded.res.spec.n,
            codim: expanded.res.spec.codim,
            tolerance: pcfg.tolerance,
            rows_checked,
            max_abs_err: cmp.max_abs_err,
            max_rel_err: cmp.max_rel_err,
            verticality: fitted.verticality.max_c1,
            verticality_tol: pcfg.verticality_tol,
            log_detected: fitted.fit.log_detected(),
            formal_first_log: expanded.res.structure.first_log,
            pass,
        },
    )?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Check {
            module: "pipeline",
            message: format!(
                "fitted coefficients deviate by {:.3e} (tolerance {:.1e}) or verticality {:.3e} exceeds {:.1e}",
                cmp.max_abs_err, pcfg.tolerance, fitted.verticality.max_c1, pcfg.verticality_tol
            ),
        })
    }
}

// ---------------------------------------------------------------- envelope

/// Command-line overrides of the envelope geometry.
#[derive(Clone, Debug, Default)]
pub struct GeometryOverrides {
    pub geometry: Option<String>,
    pub cloud: Option<std::path::PathBuf>,
    pub samples: Option<usize>,
    pub alpha: Option<f64>,
    pub resolution: Option<f64>,
}

impl GeometryOverrides {
    pub fn apply(&self, mut g: Geometry) -> Result<Geometry, CliError> {
        if let Some(kind) = &self.geometry {
            g = match kind.as_str() {
                "circle" => Geometry::Circle { ambient: 2, radius: 1.0, samples: 720 },
                "line" => Geometry::Line { ambient: 2, half_length: 1.0, samples: 401 },
                "crease" => Geometry::default(),
                other => return Err(CliError::config("--geometry", format!("unknown geometry `{other}`"))),
            };
        }
        if let Some(path) = &self.cloud {
            g = match g {
                Geometry::Cloud { ambient, intrinsic, alpha, resolution, .. } => {
                    Geometry::Cloud { path: path.clone(), ambient, intrinsic, alpha, resolution }
                }
                _ => Geometry::Cloud { path: path.clone(), ambient: 2, intrinsic: 1, alpha: 1.0, resolution: 0.05 },
            };
        }
        match &mut g {
            Geometry::Circle { samples, .. } | Geometry::Line { samples, .. } => {
                if let Some(s) = self.samples {
                    *samples = s;
                }
            }
            Geometry::Crease { samples, alpha, .. } => {
                if let Some(s) = self.samples {
                    *samples = s;
                }
                if let Some(a) = self.alpha {
                    *alpha = a;
                }
            }
            Geometry::Cloud { alpha, resolution, .. } => {
                if let Some(a) = self.alpha {
                    *alpha = a;
                }
                if let Some(r) = self.resolution {
                    *resolution = r;
                }
            }
        }
        Ok(g)
    }

    pub fn any(&self) -> bool {
        self.geometry.is_some() || self.cloud.is_some() || self.samples.is_some() || self.alpha.is_some() || self.resolution.is_some()
    }
}

/// Reads a cloud CSV: `ambient` coordinates, then `codim × ambient` normal entries per row.
pub fn read_cloud(bytes: &[u8], ambient: usize, codim: usize) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let path = "envelope.geometry.path";
    let width = ambient * (1 + codim);
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(bytes);
    let (mut points, mut normals) = (Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::config(path, format!("row {}: {e}", line + 1)))?;
        if rec.len() != width {
            return Err(CliError::config(path, format!("row {}: {} fields, expected {width}", line + 1, rec.len())));
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| CliError::config(path, format!("row {}, column {}: `{field}` is not a number", line + 1, c + 1)))?;
            if c < ambient {
                points.push(v);
            } else {
                normals.push(v);
            }
        }
    }
    Ok((points, normals))
}

fn build_manifold(g: &Geometry, cloud: Option<&[u8]>) -> Result<BoundaryManifold, CliError> {
    let m = |e| CliError::module("envelope", e);
    match g {
        Geometry::Circle { ambient, radius, samples } => BoundaryManifold::circle(*ambient, *radius, *samples).map_err(m),
        Geometry::Line { ambient, half_length, samples } => BoundaryManifold::line(*ambient, *half_length, *samples).map_err(m),
        Geometry::Crease { ambient, c, alpha, half_length, samples } => {
            BoundaryManifold::crease(*ambient, *c, *alpha, *half_length, *samples).map_err(m)
        }
        Geometry::Cloud { ambient, intrinsic, alpha, resolution, .. } => {
            if intrinsic >= ambient || *intrinsic == 0 {
                return Err(CliError::config("envelope.geometry.intrinsic", "need 1 ≤ intrinsic < ambient"));
            }
            let (points, normals) = read_cloud(cloud.unwrap_or_default(), *ambient, ambient - intrinsic)?;
            BoundaryManifold::from_cloud(*ambient, *intrinsic, points, normals, *alpha, *resolution).map_err(m)
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct GeometryDoc<'a> {
    spec: &'a Geometry,
    ambient: usize,
    intrinsic: usize,
    codim: usize,
    alpha: f64,
    samples: usize,
    resolution: f64,
    scale: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct BasePoint {
    index: usize,
    point: Vec<f64>,
    normal: Vec<f64>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct QueryDoc {
    x: Vec<f64>,
    membership: Membership,
    distance: Distance,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct PropertyDoc {
    samples: usize,
    seed: u64,
    violations: usize,
    max_ratio: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct EnvelopeDoc<'a> {
    schema_version: u32,
    geometry: GeometryDoc<'a>,
    base: BasePoint,
    deficit: DeficitFit,
    offset: OffsetFit,
    /// Smallest `C` with `r ≤ C t^{1+α}` over the offset samples.
    offset_constant: f64,
    queries: Vec<QueryDoc>,
    delta_bound: PropertyDoc,
}

pub fn run_envelope(ctx: &mut Context, overrides: &GeometryOverrides, cloud: Option<&[u8]>) -> Result<(), CliError> {
    let mut block: EnvelopeBlock = ctx.cfg.envelope.clone().unwrap_or_default();
    block.geometry = overrides.apply(block.geometry)?;
    let g = build_manifold(&block.geometry, cloud)?;
    let q = match (block.sample, block.at) {
        (Some(i), _) if i < g.len() => i,
        (Some(i), _) => return Err(CliError::config("envelope.sample", format!("sample {i} outside 0..{}", g.len()))),
        (None, at) if g.chart().is_some() => g
            .sample_at(at.unwrap_or(0.0))
            .ok_or_else(|| CliError::config("envelope.at", "parameter outside the chart"))?,
        (None, _) => 0,
    };
    let m = |e| CliError::module("envelope", e);
    let offsets = block.offsets.clone().unwrap_or_else(|| {
        let base = geometric(1e-4, 1e-2, 6);
        match block.geometry {
            // Outward offsets of a closed convex curve leave the hull.
            Geometry::Circle { radius, .. } => base.iter().map(|r| -r * radius).collect(),
            _ => base,
        }
    });
    let search = block.search;
    let r_samples = block.r_samples.clone();
    let (deficit, table, offset) = ctx.timed("envelope", |ctx| -> Result<_, CliError> {
        let deficit = envelope_exponent_fit(&g, q, &r_samples, block.noise).map_err(m)?;
        let table = ctx.map(&r_samples, |_, &r| delta_q_r(&g, q, r)).into_iter().collect::<Result<Vec<_>, _>>().map_err(m)?;
        let offset = envelope_offset_exponent(&g, q, &offsets, &search).map_err(m)?;
        Ok((deficit, table, offset))
    })?;
    let (point, normal) = (g.point(q).to_vec(), g.normal(q).to_vec());
    let mut edge = Vec::with_capacity(offset.samples.len());
    for &(r, t) in &offset.samples {
        let mut x: Vec<f64> = point.iter().zip(&normal).map(|(p, v)| p + r * v).collect();
        x.push(t);
        edge.push(normal_offset(&g, &x).map_err(m)?);
    }
    let offset_constant = calibrate_offset_constant(&edge);

    let queries = ctx.timed("envelope-queries", |ctx| {
        ctx.map(&block.queries, |_, x| -> Result<QueryDoc, CliError> {
            Ok(QueryDoc { x: x.clone(), membership: in_w(&g, x, &search).map_err(m)?, distance: g.dist_to_gamma(x).map_err(m)? })
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let probes: Vec<(usize, f64)> = (0..block.property_samples)
        .map(|_| (rng.random_range(0..g.len()), g.scale() * 10f64.powf(rng.random_range(-4.0..0.0))))
        .collect();
    let ratios = ctx.map(&probes, |_, &(qi, r)| delta_q_r(&g, qi, r).map(|d| d.delta / r));
    let ratios = ratios.into_iter().collect::<Result<Vec<_>, _>>().map_err(m)?;
    let violations = ratios.iter().filter(|&&x| x > 1.0).count();
    let max_ratio = ratios.iter().copied().fold(0.0f64, f64::max);

    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|d| vec![num(d.r), num(d.delta), num(d.plus), num(d.minus), num(d.r - d.delta), flag(d.coarse)])
        .collect();
    ctx.out.table("delta", &["r", "delta", "plus", "minus", "deficit", "coarse"], &rows)?;
    let rows: Vec<Vec<String>> = edge.iter().zip(&offset.samples).map(|(o, &(r, t))| vec![num(r), num(t), num(o.ratio)]).collect();
    ctx.out.csv("offset.csv", &["r", "height", "ratio"], &rows)?;
    ctx.out.json(
        "envelope.json",
        &EnvelopeDoc {
            schema_version: SCHEMA_VERSION,
            geometry: GeometryDoc {
                spec: &block.geometry,
                ambient: g.ambient_dim(),
                intrinsic: g.intrinsic_dim(),
                codim: g.codim(),
                alpha: g.alpha(),
                samples: g.len(),
                resolution: g.resolution(),
                scale: g.scale(),
            },
            base: BasePoint { index: q, point, normal },
            deficit,
            offset,
            offset_constant,
            queries,
            delta_bound: PropertyDoc { samples: block.property_samples, seed: ctx.cfg.seed, violations, max_ratio },
        },
    )?;
    if violations > 0 {
        return Err(CliError::Check { module: "envelope", message: format!("δ(Q, r) > r at {violations} probes") });
    }
    Ok(())
}
