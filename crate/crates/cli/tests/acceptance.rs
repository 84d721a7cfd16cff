//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use hypermin_core::envelope::{
    delta_q_r, envelope_exponent_fit, envelope_offset_exponent, BoundaryManifold, EnvelopeConfig, Verdict,
};
use hypermin_core::expansion::{expand, residual_check, structure_check, ExpansionResult, ProblemSpec};
use hypermin_core::fitter::{
    compare_fit_to_formal, fit_expansion, geometric_samples, stations_from_series, FitConfig,
};
use hypermin_core::linalg::svd;
use hypermin_core::series::{PolyJet, Rational, Scalar};
use hypermin_core::solver::{
    energy, energy_solve, normalized_energy_gradient, ode_solve, rotational_refinement, rotational_series_exact,
    rotational_solve, Grid, GridField, NewtonConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;

type Outcome = Result<String, String>;

fn q(a: i64, b: i64) -> Rational {
    Rational::from_frac(a, b)
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// A generic boundary datum of degree four for component `s` in `d` variables.
fn generic_phi(d: usize, s: usize, degree: u32) -> PolyJet<Rational> {
    let mut terms: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
    let mut add = |e: Vec<u32>, c: Rational| {
        let slot = terms.entry(e).or_insert_with(Rational::zero);
        *slot = &*slot + &c;
    };
    let si = s as i64;
    let last = d - 1;
    for a in 0..d {
        let mut e = vec![0; d];
        e[a] = 2;
        add(e, q(1, 2 + a as i64 + si));
    }
    let mut e = vec![0; d];
    e[0] = 1;
    add(e, q(si + 1, 5));
    let mut e = vec![0; d];
    e[0] += 1;
    e[last] += 1;
    add(e, q(1, 3 + si));
    let mut e = vec![0; d];
    e[last] = 3;
    add(e, q(if s.is_multiple_of(2) { 1 } else { -1 }, 9));
    let mut e = vec![0; d];
    e[0] += 3;
    e[last] += 1;
    add(e, q(1, 7 + si));
    PolyJet::from_terms(d, degree, terms).unwrap()
}

struct MatrixRun {
    n: usize,
    k: usize,
    res: ExpansionResult<Rational>,
    secs: f64,
}

fn formal_matrix() -> Vec<MatrixRun> {
    let specs: Vec<(usize, usize)> = (2..=5).flat_map(|n| (1..=3).map(move |k| (n, k))).collect();
    specs
        .into_par_iter()
        .map(|(n, k)| {
            let start = Instant::now();
            let phi = (0..k).map(|s| generic_phi(n - 1, s, 4)).collect();
            let spec = ProblemSpec::new(n, phi, 3 * n as u32 + 2, 4);
            let res = expand(&spec).unwrap();
            MatrixRun { n, k, res, secs: start.elapsed().as_secs_f64() }
        })
        .collect()
}

fn criterion_1(runs: &[MatrixRun]) -> Outcome {
    let mut bad = Vec::new();
    let mut slowest: f64 = 0.0;
    for run in runs {
        let start = Instant::now();
        let rep = residual_check(&run.res).map_err(|e| e.to_string())?;
        slowest = slowest.max(run.secs + start.elapsed().as_secs_f64());
        if !(rep.frontier_clean && rep.routes_agree) {
            bad.push((run.n, run.k));
        }
    }
    ensure(bad.is_empty(), format!("{} specs, failures {bad:?}, slowest {slowest:.2} s", runs.len()))
}

fn criterion_2(runs: &[MatrixRun]) -> Outcome {
    let bad: Vec<_> = runs.iter().filter(|r| !structure_check(&r.res).all_passed()).map(|r| (r.n, r.k)).collect();
    let logged: Vec<_> = runs
        .iter()
        .filter(|r| r.n % 2 == 1)
        .filter(|r| r.res.coeff(r.n as u32 + 1, 1).is_some_and(|c| c.iter().any(|j| !j.is_zero())))
        .map(|r| (r.n, r.k))
        .collect();
    ensure(
        bad.is_empty() && !logged.is_empty(),
        format!("structure failures {bad:?}, odd specs with a resonant log {logged:?}"),
    )
}

/// Coefficients of `u(t)/t^{n+1}` as a polynomial in `t^{2n}`, from quadrature.
fn quadrature_coefficients(n: usize, k: f64) -> Result<[f64; 2], String> {
    let (points, degree) = (48usize, 6usize);
    let s_max = 0.01 / (k * k);
    let t_max = s_max.powf(1.0 / (2 * n) as f64);
    let s: Vec<f64> = (1..=points).map(|i| s_max * i as f64 / points as f64).collect();
    let t: Vec<f64> = s.iter().map(|v| v.powf(1.0 / (2 * n) as f64)).collect();
    let prof = ode_solve(n, k, t_max, &t).map_err(|e| e.to_string())?;
    let mut a = Vec::with_capacity(points * degree);
    let mut b = Vec::with_capacity(points);
    for i in 0..points {
        let x = s[i] / s_max;
        a.extend((0..degree).map(|p| x.powi(p as i32)));
        b.push(prof.u[i] / t[i].powi(n as i32 + 1));
    }
    let c = svd(&a, points, degree).map_err(|e| e.to_string())?.solve(&b);
    Ok([c[0], c[1] / s_max])
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut exact_ok = true;
    for n in [2usize, 3, 4] {
        let kk = q(1, 2);
        let m = n as i64;
        let want1 = &kk / q(m + 1, 1);
        let want3 = &kk * &kk * &kk / q(2 * (3 * m + 1), 1);
        let free = vec![PolyJet::constant(n - 1, 0, want1.clone())];
        let spec = ProblemSpec::new(n, vec![PolyJet::zero(n - 1, 0)], 3 * n as u32 + 1, 0).with_free_coeff(free);
        let res = expand(&spec).map_err(|e| e.to_string())?;
        let series = rotational_series_exact(n, &kk, 2);
        exact_ok &= res.coeff_at_origin(n as u32 + 1, 0, 0) == want1
            && res.coeff_at_origin(3 * n as u32 + 1, 0, 0) == want3
            && series == vec![(n as u32 + 1, want1.clone()), (3 * n as u32 + 1, want3.clone())];
        let got = quadrature_coefficients(n, kk.to_f64())?;
        worst = worst.max((got[0] / want1.to_f64() - 1.0).abs()).max((got[1] / want3.to_f64() - 1.0).abs());
    }
    ensure(exact_ok && worst <= 1e-8, format!("exact identities {exact_ok}, quadrature relative error {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let cfg = NewtonConfig::default();
    let mut orders = Vec::new();
    for n in [2usize, 3] {
        let table = rotational_refinement(n, 0.5, 1.0, 5, &[16, 32, 64, 128], &cfg).map_err(|e| e.to_string())?;
        orders.push(table.order.unwrap_or(f64::NAN));
    }
    let g = Grid::new(2, 1, 0.5, 5, 1.0, 64, 2.0).map_err(|e| e.to_string())?;
    let (_, rep, _) = rotational_solve(&g, 0.5, &cfg).map_err(|e| e.to_string())?;
    let ok = orders.iter().all(|o| (1.8..=2.2).contains(o)) && rep.converged && rep.final_residual <= 1e-10;
    ensure(ok, format!("orders {orders:.3?}, converged residual {:.2e}", rep.final_residual))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = Grid::new(3, 2, 0.5, 4, 1.0, 5, 2.0).map_err(|e| e.to_string())?;
    let t_cut = g.t(1);
    let mut u = GridField::zeros(g.clone());
    for v in &mut u.values {
        *v = rng.random_range(-0.5..0.5);
    }
    let e = energy(&u, t_cut).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let dir: Vec<f64> = (0..u.values.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = 1e-5;
        let shift = |s: f64| {
            let mut w = u.clone();
            for (v, d) in w.values.iter_mut().zip(&dir) {
                *v += s * d;
            }
            energy(&w, t_cut).map(|e| e.value)
        };
        let fd = (shift(h).map_err(|e| e.to_string())? - shift(-h).map_err(|e| e.to_string())?) / (2.0 * h);
        let an: f64 = e.gradient.iter().zip(&dir).map(|(a, b)| a * b).sum();
        worst = worst.max((fd - an).abs() / an.abs().max(1e-300));
    }
    let cfg = NewtonConfig::default();
    let g = Grid::new(2, 1, 0.5, 5, 1.0, 24, 2.0).map_err(|e| e.to_string())?;
    let (start, _, _) = rotational_solve(&g, 0.5, &cfg).map_err(|e| e.to_string())?;
    let cut = g.t(2);
    let (v, rep) = energy_solve(&start, cut, &cfg).map_err(|e| e.to_string())?;
    let grad = normalized_energy_gradient(&v, cut).map_err(|e| e.to_string())?;
    let norm = grad.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    ensure(
        worst <= 1e-6 && rep.converged && norm <= 10.0 * cfg.tol,
        format!("worst directional error {worst:.2e}, gradient norm {norm:.2e} against tolerance {:.0e}", cfg.tol),
    )
}

fn quadratic_phi(n: usize) -> PolyJet<Rational> {
    let d = n - 1;
    let mut terms = Vec::new();
    for a in 0..d {
        let mut e = vec![0u32; d];
        e[a] = 2;
        terms.push((e, q(1, 2 + 2 * a as i64)));
    }
    let mut e = vec![0u32; d];
    e[0] = 1;
    terms.push((e, q(1, 5)));
    PolyJet::from_terms(d, 6, terms).unwrap()
}

/// Fit of series-generated samples, worst error relative to the tolerance.
fn series_fit_ratio() -> Result<f64, String> {
    let window = (1.0 / 64.0, 1.0 / 4.0);
    let mut worst: f64 = 0.0;
    for (n, logs) in [(2usize, false), (3, true)] {
        let res = expand(&ProblemSpec::new(n, vec![quadratic_phi(n)], 6, 6)).map_err(|e| e.to_string())?;
        let ys = vec![vec![0.0; n - 1], vec![0.1; n - 1]];
        let t = geometric_samples(window.0, window.1, 240);
        let st = stations_from_series(&res.u.to_f64(), &ys, &t);
        let cfg = FitConfig { max_order: 6, logs, window: Some(window), ..FitConfig::default() };
        let fit = fit_expansion(n, &st, &cfg).map_err(|e| e.to_string())?;
        let cmp = compare_fit_to_formal(&fit, &res, 6).map_err(|e| e.to_string())?;
        let amp = st[0].u.iter().fold(0.0f64, |m, v| m.max((v - st[0].phi[0]).abs()));
        for r in &cmp.rows {
            let scale = r.formal.abs().max(amp / window.1.powi(r.i as i32));
            worst = worst.max(r.abs_err / (1e-8 * scale));
        }
    }
    Ok(worst)
}

fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_hypermin"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn pipeline(cfg: &str, out: &Path) -> Result<(), String> {
    let status = Command::new(bin())
        .arg("--config")
        .arg(config(cfg))
        .arg("--out")
        .arg(out)
        .args(["--threads", "1", "pipeline"])
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), format!("pipeline {cfg} exited with {status}")).map(|_| ())
}

fn read_json(path: &Path) -> Result<Value, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_slice(&bytes).map_err(|e| e.to_string())
}

struct Pipelines {
    n2: PathBuf,
    n2_again: PathBuf,
    n3: PathBuf,
    _root: tempfile::TempDir,
}

fn run_pipelines() -> Result<Pipelines, String> {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = Pipelines {
        n2: root.path().join("n2"),
        n2_again: root.path().join("n2_again"),
        n3: root.path().join("n3"),
        _root: root,
    };
    pipeline("pipeline_n2.json", &p.n2)?;
    pipeline("pipeline_n2.json", &p.n2_again)?;
    pipeline("pipeline_n3.json", &p.n3)?;
    Ok(p)
}

fn criterion_6(p: &Pipelines) -> Outcome {
    let ratio = series_fit_ratio()?;
    let mut detail = format!("series fit at {ratio:.2} of the 1e-8 tolerance");
    let mut ok = ratio <= 1.0;
    for (n, dir) in [(2, &p.n2), (3, &p.n3)] {
        let doc = read_json(&dir.join("pipeline.json"))?;
        let err = doc["maxAbsErr"].as_f64().unwrap_or(f64::NAN);
        let vert = doc["verticality"].as_f64().unwrap_or(f64::NAN);
        ok &= err <= 1e-3 && vert <= 1e-4 && doc["rowsChecked"].as_u64().unwrap_or(0) > 0;
        detail.push_str(&format!("; n = {n}: max error {err:.2e}, |c1| {vert:.1e}"));
    }
    ensure(ok, detail)
}

fn criterion_7(p: &Pipelines) -> Outcome {
    let n2 = read_json(&p.n2.join("pipeline.json"))?;
    let silent = n2["logDetected"] == Value::Bool(false);
    let fit = read_json(&p.n3.join("fit.json"))?;
    let rows: Vec<(f64, f64)> = fit["comparison"]["rows"]
        .as_array()
        .ok_or("fit.json has no comparison rows")?
        .iter()
        .filter(|r| r["i"] == 4 && r["j"] == 1)
        .map(|r| (r["fitted"].as_f64().unwrap_or(f64::NAN), r["formal"].as_f64().unwrap_or(f64::NAN)))
        .collect();
    let agree = !rows.is_empty() && rows.iter().all(|&(f, c)| c != 0.0 && f * c > 0.0 && (f / c - 1.0).abs() <= 0.2);
    let pairs: Vec<String> = rows.iter().map(|(f, c)| format!("{f:.6}/{c:.6}")).collect();
    ensure(silent && agree, format!("n = 2 log silent {silent}; n = 3 fitted/formal c(4,1) {}", pairs.join(", ")))
}

fn criterion_8() -> Outcome {
    let geometric = |lo: f64, hi: f64, count: usize| -> Vec<f64> {
        (0..count).map(|j| lo * (hi / lo).powf(j as f64 / (count - 1) as f64)).collect()
    };
    let circle = BoundaryManifold::circle(2, 1.0, 720).map_err(|e| e.to_string())?;
    let crease = BoundaryManifold::crease(2, 1.0, 0.5, 1.0, 2001).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut over: f64 = 0.0;
    let mut circle_err: f64 = 0.0;
    for _ in 0..500 {
        let r = 10f64.powf(rng.random_range(-4.0..-0.1));
        let qc = rng.random_range(0..circle.len());
        let dc = delta_q_r(&circle, qc, r).map_err(|e| e.to_string())?;
        circle_err = circle_err.max((dc.delta - r).abs());
        let qk = rng.random_range(0..crease.len());
        let dk = delta_q_r(&crease, qk, r).map_err(|e| e.to_string())?;
        over = over.max(dc.delta - r).max(dk.delta - r);
    }
    let centre = crease.sample_at(0.0).ok_or("crease has no sample at 0")?;
    let deficit = envelope_exponent_fit(&crease, centre, &geometric(0.01, 0.1, 8), 1e-9).map_err(|e| e.to_string())?;
    let slope = deficit.slope.unwrap_or(f64::NAN);
    let cfg = EnvelopeConfig::default();
    let offset = envelope_offset_exponent(&crease, centre, &geometric(1e-4, 1e-2, 6), &cfg).map_err(|e| e.to_string())?;
    let inward: Vec<f64> = geometric(1e-4, 1e-2, 6).iter().map(|r| -r).collect();
    let round = envelope_offset_exponent(&circle, 0, &inward, &cfg).map_err(|e| e.to_string())?;
    let within = |f: &hypermin_core::envelope::OffsetFit| {
        f.slope.is_some_and(|s| (s - f.target).abs() <= 0.2 * f.target) && f.verdict == Verdict::Pass
    };
    ensure(
        over <= 0.0 && circle_err <= 1e-10 && slope >= 1.6 && within(&offset) && within(&round),
        format!(
            "max δ − r {over:.1e}, circle |δ − r| {circle_err:.1e}, crease deficit slope {slope:.3}, offset exponents {:.3} (crease) {:.3} (circle)",
            offset.slope.unwrap_or(f64::NAN),
            round.slope.unwrap_or(f64::NAN)
        ),
    )
}

fn files(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name != "manifest.json" {
            out.insert(name, std::fs::read(entry.path()).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

fn criterion_9(p: &Pipelines) -> Outcome {
    let (a, b) = (files(&p.n2)?, files(&p.n2_again)?);
    let differing: Vec<_> = a.keys().filter(|k| a.get(*k) != b.get(*k)).cloned().collect();
    let ok = !a.is_empty() && a.len() == b.len() && differing.is_empty();
    ensure(ok, format!("{} files compared, differing {differing:?}", a.len()))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let runs = formal_matrix();
    let pipelines = run_pipelines();
    let with_pipelines = |f: fn(&Pipelines) -> Outcome| match &pipelines {
        Ok(p) => f(p),
        Err(e) => Err(e.clone()),
    };
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "formal residual frontier", criterion_1(&runs)),
        (2, "structure checks", criterion_2(&runs)),
        (3, "rotational oracle", criterion_3()),
        (4, "solver convergence order", criterion_4()),
        (5, "energy gradient consistency", criterion_5()),
        (6, "fit fidelity", with_pipelines(criterion_6)),
        (7, "even/odd log dichotomy", with_pipelines(criterion_7)),
        (8, "envelope estimates", criterion_8()),
        (9, "pipeline determinism", with_pipelines(criterion_9)),
    ];
    let mut failed = 0;
    for (id, name, outcome) in &results {
        match outcome {
            Ok(d) => println!("criterion {id} PASS {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {id} FAIL {name}: {d}");
            }
        }
    }
    println!("{} of {} criteria passed in {:.1} s", results.len() - failed, results.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
