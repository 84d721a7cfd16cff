//! Recovery of boundary-expansion coefficients `ĉ_{i,j}(y')` from sampled
//! solutions, by peeling order by order followed by a joint least-squares fit.
//!
//! Each station is fitted independently. Logarithmic slots enter the basis only
//! where the structure allows them, `i ≥ n + 1` and `j ≤ ⌊(i − 1)/n⌋`. All fits
//! run in the scaled variable `s = t / t_hi`, where every column is `O(1)` at the
//! top of the window, so a small singular value means a genuine collision; the results
//! are mapped back to the `t^i (ln t)^j` basis together with their covariances.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math;
use crate::expansion::ExpansionResult;
use crate::linalg::{svd, LinalgError};
use crate::mesh::GridField;
use crate::solver::{restrict, SolverError};
use crate::series::{Scalar, VectorLogSeries};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("no stations to fit")]
    NoStations,
    #[error("station {station}: {detail}")]
    Shape { station: usize, detail: &'static str },
    #[error("window [{lo}, {hi}] is invalid")]
    Window { lo: f64, hi: f64 },
    #[error("station {station}: {have} samples in the window, {need} needed")]
    TooFewPoints { station: usize, have: usize, need: usize },
    #[error("ill-conditioned fit (condition {condition:.3e}): t^{}·log^{} t collides with t^{}·log^{} t", a.0, a.1, b.0, b.1)]
    IllConditioned { a: (u32, u32), b: (u32, u32), condition: f64 },
    #[error("fit and expansion disagree on {0}")]
    Mismatch(&'static str),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct FitConfig {
    /// Highest order `K_fit`.
    pub max_order: u32,
    /// Admit the structurally allowed log slots.
    pub logs: bool,
    /// Further cap on the log power, if any.
    pub max_log: Option<u32>,
    /// Absolute window; `None` means `[r/64, r/4]` with `r` the largest sample `t`.
    pub window: Option<(f64, f64)>,
    /// Extra orders carried along in each peeling stage.
    pub lookahead: u32,
    /// Condition number above which the order window is shrunk.
    pub condition_limit: f64,
    pub min_points_per_coeff: usize,
    /// Multiple of the coefficient uncertainty a value must exceed to count.
    pub significance: f64,
    /// Absolute max-norm noise of the data, bounded through the worst-case
    /// sensitivity of each coefficient; station error samples are usually sharper.
    pub noise_floor: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_order: 6,
            logs: true,
            max_log: None,
            window: None,
            lookahead: 64,
            condition_limit: 1e13,
            min_points_per_coeff: 4,
            significance: 4.0,
            noise_floor: 0.0,
        }
    }
}

impl FitConfig {
    /// The configured window, or `[r/64, r/4]` with `r` the largest sample `t`.
    pub fn resolve_window(&self, stations: &[Station]) -> (f64, f64) {
        self.window.unwrap_or_else(|| {
            let r = stations.iter().flat_map(|s| s.t.iter().copied()).fold(0.0f64, f64::max);
            (r / 64.0, r / 4.0)
        })
    }
}

/// Samples along one normal line `{y'} × (0, r]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Station {
    pub y: Vec<f64>,
    /// Boundary value `φ(y')`, one entry per component.
    pub phi: Vec<f64>,
    pub t: Vec<f64>,
    /// `t.len() × k` values, row-major.
    pub u: Vec<f64>,
    /// Estimated error of `u` in the same layout, e.g. the gap between two
    /// refinement levels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<Vec<f64>>,
}

impl Station {
    pub fn from_fn(y: Vec<f64>, phi: Vec<f64>, t: &[f64], mut f: impl FnMut(f64) -> Vec<f64>) -> Self {
        let k = phi.len();
        let mut u = Vec::with_capacity(t.len() * k);
        for &tp in t {
            u.extend_from_slice(&f(tp)[..k]);
        }
        Station { y, phi, t: t.to_vec(), u, error: None }
    }

    pub fn codim(&self) -> usize {
        self.phi.len()
    }

    pub fn with_error(mut self, error: Vec<f64>) -> Self {
        self.error = Some(error);
        self
    }
}

/// `count` points spaced geometrically on `[lo, hi]`.
pub fn geometric_samples(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![hi];
    }
    let ratio = math::ln(hi / lo);
    (0..count)
        .map(|p| if p + 1 == count { hi } else { lo * math::exp(ratio * p as f64 / (count - 1) as f64) })
        .collect()
}

/// Stations of a grid solution at the given tangential indices, using every
/// node with `t > 0`.
pub fn stations_from_grid(u: &GridField, phi: &dyn Fn(&[f64]) -> Vec<f64>, tangs: &[usize]) -> Vec<Station> {
    let g = &u.grid;
    tangs
        .iter()
        .map(|&tang| {
            let y = g.y_of(tang);
            let t: Vec<f64> = (1..=g.nt).map(|j| g.t(j)).collect();
            let mut vals = Vec::with_capacity(t.len() * g.codim);
            for j in 1..=g.nt {
                vals.extend_from_slice(u.at(g.node(tang, j)));
            }
            Station { phi: phi(&y), y, t, u: vals, error: None }
        })
        .collect()
}

/// Stations of the finer of two nested solutions, sampled on the coarse nodes,
/// with their difference as the error estimate.
pub fn stations_from_refinement(
    fine: &GridField,
    coarse: &GridField,
    phi: &dyn Fn(&[f64]) -> Vec<f64>,
    tangs: &[usize],
) -> Result<Vec<Station>, SolverError> {
    let down = restrict(fine, &coarse.grid)?;
    let base = stations_from_grid(coarse, phi, tangs);
    Ok(stations_from_grid(&down, phi, tangs)
        .into_iter()
        .zip(base)
        .map(|(st, c)| {
            let err = st.u.iter().zip(&c.u).map(|(a, b)| a - b).collect();
            st.with_error(err)
        })
        .collect())
}

/// Stations sampling a series at geometrically spaced `t`.
pub fn stations_from_series(u: &VectorLogSeries<f64>, ys: &[Vec<f64>], t: &[f64]) -> Vec<Station> {
    ys.iter()
        .map(|y| {
            let phi: Vec<f64> = u
                .components()
                .iter()
                .map(|c| c.coeff(0, 0).map(|p| p.eval(y)).unwrap_or(0.0))
                .collect();
            Station::from_fn(y.clone(), phi, t, |tp| u.eval(y, tp).unwrap_or_default())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitCoefficient {
    pub i: u32,
    pub j: u32,
    pub component: usize,
    pub value: f64,
    pub std_err: f64,
    /// Value from the peeling pass.
    pub peeled: f64,
    /// Change when refitting on the lower half of the window; absent for
    /// slots outside the joint fit or when the refit is not possible.
    pub window_shift: Option<f64>,
    /// Largest of the error measures listed under `significant`; absent with the shift.
    pub uncertainty: Option<f64>,
    /// `|value|` exceeds `significance` times the largest of the standard
    /// error, the window shift, the effect of the station error estimate and
    /// the resolvable floor.
    pub significant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StationFit {
    pub y: Vec<f64>,
    pub coefficients: Vec<FitCoefficient>,
    /// Max-norm misfit on the window.
    pub residual_norm: f64,
    /// Condition number of the accepted joint design matrix.
    pub condition: f64,
    /// Highest order retained by the joint fit; higher orders are peeled values.
    pub joint_order: u32,
    /// Largest gap between peeled and joint values, relative to their size.
    pub peel_discrepancy: f64,
    pub log_detected: bool,
    /// `max_s |ĉ_{1,0,s}|`.
    pub verticality: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExpansionFit {
    pub n: usize,
    pub codim: usize,
    pub max_order: u32,
    pub window: (f64, f64),
    pub stations: Vec<StationFit>,
    pub residual_norm: f64,
}

impl ExpansionFit {
    pub fn coefficient(&self, station: usize, i: u32, j: u32, s: usize) -> Option<&FitCoefficient> {
        self.stations
            .get(station)?
            .coefficients
            .iter()
            .find(|c| c.i == i && c.j == j && c.component == s)
    }

    pub fn value(&self, station: usize, i: u32, j: u32, s: usize) -> f64 {
        self.coefficient(station, i, j, s).map(|c| c.value).unwrap_or(0.0)
    }

    pub fn log_detected(&self) -> bool {
        self.stations.iter().any(|s| s.log_detected)
    }
}

/// Basis slots `(i, j)` of orders `1..=max_order`.
pub fn fit_basis(n: usize, cfg: &FitConfig) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for i in 1..=cfg.max_order {
        out.push((i, 0));
        if cfg.logs && i as usize > n {
            let mut top = (i - 1) / n as u32;
            if let Some(cap) = cfg.max_log {
                top = top.min(cap);
            }
            out.extend((1..=top).map(|j| (i, j)));
        }
    }
    out
}

struct LocalFit {
    /// Coefficients in the `t` basis.
    coef: Vec<f64>,
    cov: Vec<f64>,
    /// `√m · √((AᵀA)⁻¹)_cc`: bound on the change of each coefficient per unit
    /// max-norm change of the data.
    sensitivity: Vec<f64>,
    condition: f64,
    /// Right singular vector of the smallest singular value.
    null_dir: Vec<f64>,
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, m| acc * (n - m) as f64 / (m + 1) as f64)
}

/// Least squares of `w(t)` against `slots` at `pts`, in `s = t/hi`.
fn local_fit(slots: &[(u32, u32)], t: &[f64], w: &[f64], hi: f64) -> Result<LocalFit, FitError> {
    let (m, p) = (t.len(), slots.len());
    let mut a = vec![0.0; m * p];
    for (r, &tp) in t.iter().enumerate() {
        let s = tp / hi;
        let ls = math::ln(s);
        for (c, &(i, j)) in slots.iter().enumerate() {
            a[r * p + c] = math::powi(s, i as i32) * math::powi(ls, j as i32);
        }
    }
    let dec = svd(&a, m, p)?;
    let x = dec.solve(w);
    let mut rss = 0.0;
    for r in 0..m {
        let fit: f64 = (0..p).map(|c| a[r * p + c] * x[c]).sum();
        rss += (w[r] - fit) * (w[r] - fit);
    }
    let sigma2 = if m > p { rss / (m - p) as f64 } else { 0.0 };
    let ninv = dec.normal_inverse();
    // a_c is the coefficient of s^i ln^j s; map to t^i ln^J t.
    let lh = math::ln(hi);
    let mut tmat = vec![0.0; p * p];
    for (c, &(i, jj)) in slots.iter().enumerate() {
        let base = 1.0 / math::powi(hi, i as i32);
        for (d, &(i2, j)) in slots.iter().enumerate() {
            if i2 == i && j <= jj {
                tmat[d * p + c] = base * binom(jj, j) * math::powi(-lh, (jj - j) as i32);
            }
        }
    }
    let coef: Vec<f64> = (0..p).map(|d| (0..p).map(|c| tmat[d * p + c] * x[c]).sum()).collect();
    let mut cov = vec![0.0; p * p];
    for d in 0..p {
        for e in 0..p {
            let mut acc = 0.0;
            for c in 0..p {
                for f in 0..p {
                    acc += tmat[d * p + c] * ninv[c * p + f] * tmat[e * p + f];
                }
            }
            cov[d * p + e] = sigma2 * acc;
        }
    }
    let sensitivity = (0..p)
        .map(|d| {
            let nd: f64 = (0..p)
                .flat_map(|c| (0..p).map(move |f| (c, f)))
                .map(|(c, f)| tmat[d * p + c] * ninv[c * p + f] * tmat[d * p + f])
                .sum();
            math::sqrt(m as f64 * nd.max(0.0))
        })
        .collect();
    let null_dir = (0..p).map(|c| dec.v[c * p + p - 1]).collect();
    Ok(LocalFit { coef, cov, sensitivity, condition: dec.condition(), null_dir })
}

fn colliding_pair(slots: &[(u32, u32)], dir: &[f64]) -> ((u32, u32), (u32, u32)) {
    let mut idx: Vec<usize> = (0..slots.len()).collect();
    idx.sort_by(|&a, &b| dir[b].abs().partial_cmp(&dir[a].abs()).unwrap_or(core::cmp::Ordering::Equal));
    let first = slots[idx[0]];
    let second = idx.get(1).map(|&q| slots[q]).unwrap_or(first);
    if first <= second {
        (first, second)
    } else {
        (second, first)
    }
}

fn term(i: u32, j: u32, t: f64) -> f64 {
    math::powi(t, i as i32) * math::powi(math::ln(t), j as i32)
}

#[derive(Clone, Copy)]
struct SlotFit {
    value: f64,
    std_err: f64,
    sensitivity: f64,
    peeled: f64,
    window_shift: Option<f64>,
    error_effect: f64,
}

struct ComponentFit {
    values: BTreeMap<(u32, u32), SlotFit>,
    condition: f64,
    joint_order: u32,
}

fn fit_component(
    slots: &[(u32, u32)],
    t: &[f64],
    v: &[f64],
    err: Option<&[f64]>,
    hi: f64,
    cfg: &FitConfig,
    station: usize,
) -> Result<ComponentFit, FitError> {
    let enough = |count: usize| t.len() >= cfg.min_points_per_coeff * count;
    let order_slots = |lo: u32, top: u32| -> Vec<(u32, u32)> {
        slots.iter().copied().filter(|&(i, _)| i >= lo && i <= top).collect()
    };

    // Peeling: each stage fits orders i..=i+L, keeps order i and subtracts it.
    let mut peeled: BTreeMap<(u32, u32), SlotFit> = BTreeMap::new();
    let mut w = v.to_vec();
    for i in 1..=cfg.max_order {
        let mut look = cfg.lookahead;
        let fit = loop {
            let basis = order_slots(i, (i + look).min(cfg.max_order));
            if !enough(basis.len()) {
                if look > 0 {
                    look -= 1;
                    continue;
                }
                return Err(FitError::TooFewPoints {
                    station,
                    have: t.len(),
                    need: cfg.min_points_per_coeff * basis.len(),
                });
            }
            let f = local_fit(&basis, t, &w, hi)?;
            if f.condition <= cfg.condition_limit {
                break (basis, f);
            }
            if look == 0 {
                let (a, b) = colliding_pair(&basis, &f.null_dir);
                return Err(FitError::IllConditioned { a, b, condition: f.condition });
            }
            look -= 1;
        };
        let (basis, f) = fit;
        let p = basis.len();
        for (c, &(ii, j)) in basis.iter().enumerate() {
            if ii != i {
                continue;
            }
            let v = f.coef[c];
            let std_err = math::sqrt(f.cov[c * p + c].max(0.0));
            peeled.insert((ii, j), SlotFit { value: v, std_err, sensitivity: f.sensitivity[c], peeled: v, window_shift: None, error_effect: 0.0 });
            for (wv, &tp) in w.iter_mut().zip(t) {
                *wv -= f.coef[c] * term(ii, j, tp);
            }
        }
    }

    // Joint fit, shrinking the order window until it is well conditioned.
    let mut top = cfg.max_order;
    let mut joint = None;
    while top >= 1 {
        let basis = order_slots(1, top);
        if enough(basis.len()) {
            let f = local_fit(&basis, t, v, hi)?;
            if f.condition <= cfg.condition_limit {
                joint = Some((basis, f));
                break;
            }
        }
        top -= 1;
    }
    // Refit on the lower half of the window, dropping orders until it is well
    // conditioned; a resolved coefficient barely moves, a dropped one is unresolved.
    let shifts: Option<Vec<f64>> = joint.as_ref().and_then(|(basis, f)| {
        let keep: Vec<usize> = (0..t.len()).filter(|&p| t[p] <= 0.5 * hi * (1.0 + 1e-12)).collect();
        let ts: Vec<f64> = keep.iter().map(|&p| t[p]).collect();
        let vs: Vec<f64> = keep.iter().map(|&p| v[p]).collect();
        let mut top2 = top;
        while top2 >= 1 {
            let sub = order_slots(1, top2);
            if keep.len() >= cfg.min_points_per_coeff * sub.len() {
                if let Ok(g) = local_fit(&sub, &ts, &vs, 0.5 * hi) {
                    if g.condition <= cfg.condition_limit {
                        return Some(
                            basis
                                .iter()
                                .enumerate()
                                .map(|(c, slot)| match sub.iter().position(|x| x == slot) {
                                    Some(d) => (f.coef[c] - g.coef[d]).abs(),
                                    None => f.coef[c].abs(),
                                })
                                .collect(),
                        );
                    }
                }
            }
            top2 -= 1;
        }
        None
    });
    // The same fit applied to the error estimate is its effect on each slot.
    let effects: Option<Vec<f64>> = match (&joint, err) {
        (Some((basis, _)), Some(e)) => Some(local_fit(basis, t, e, hi)?.coef.iter().map(|c| c.abs()).collect()),
        _ => None,
    };
    let mut values = BTreeMap::new();
    let (condition, joint_order) = match &joint {
        Some((basis, f)) => {
            let p = basis.len();
            for (c, &slot) in basis.iter().enumerate() {
                values.insert(
                    slot,
                    SlotFit {
                        value: f.coef[c],
                        std_err: math::sqrt(f.cov[c * p + c].max(0.0)),
                        sensitivity: f.sensitivity[c],
                        peeled: peeled.get(&slot).map(|x| x.value).unwrap_or(0.0),
                        window_shift: shifts.as_ref().map(|s| s[c]),
                        error_effect: effects.as_ref().map(|e| e[c]).unwrap_or(0.0),
                    },
                );
            }
            (f.condition, top)
        }
        None => (f64::INFINITY, 0),
    };
    for (&slot, &x) in &peeled {
        values.entry(slot).or_insert(x);
    }
    Ok(ComponentFit { values, condition, joint_order })
}

/// Fits every station. Samples outside the window are ignored.
pub fn fit_expansion(n: usize, stations: &[Station], cfg: &FitConfig) -> Result<ExpansionFit, FitError> {
    let first = stations.first().ok_or(FitError::NoStations)?;
    let k = first.codim();
    let (lo, hi) = cfg.resolve_window(stations);
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(FitError::Window { lo, hi });
    }
    let slots = fit_basis(n, cfg);
    let mut out = Vec::with_capacity(stations.len());
    let mut worst = 0.0f64;
    for (si, st) in stations.iter().enumerate() {
        if st.codim() != k || st.u.len() != st.t.len() * k || st.error.as_ref().is_some_and(|e| e.len() != st.u.len()) {
            return Err(FitError::Shape { station: si, detail: "sample array does not match t and codim" });
        }
        let keep: Vec<usize> = (0..st.t.len()).filter(|&p| st.t[p] >= lo * (1.0 - 1e-12) && st.t[p] <= hi * (1.0 + 1e-12)).collect();
        let t: Vec<f64> = keep.iter().map(|&p| st.t[p]).collect();
        let mut coefficients = Vec::new();
        let mut residual = 0.0f64;
        let mut condition = 0.0f64;
        let mut joint_order = cfg.max_order;
        let mut discrepancy = 0.0f64;
        for s in 0..k {
            let v: Vec<f64> = keep.iter().map(|&p| st.u[p * k + s] - st.phi[s]).collect();
            let e: Option<Vec<f64>> = st.error.as_ref().map(|e| keep.iter().map(|&p| e[p * k + s]).collect());
            let cf = fit_component(&slots, &t, &v, e.as_deref(), hi, cfg, si)?;
            condition = condition.max(cf.condition);
            joint_order = joint_order.min(cf.joint_order);
            for (p, &tp) in t.iter().enumerate() {
                let model: f64 = cf.values.iter().map(|(&(i, j), x)| x.value * term(i, j, tp)).sum();
                residual = residual.max((v[p] - model).abs());
            }
            let amp = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            // Smallest data perturbation that cannot be excluded.
            let floor = cfg.noise_floor.max(16.0 * f64::EPSILON * amp);
            for (&(i, j), x) in &cf.values {
                let SlotFit { value, std_err, sensitivity, peeled, window_shift, error_effect } = *x;
                let noise = std_err.max(floor * sensitivity).max(error_effect);
                let uncertainty = window_shift.map(|w| w.max(noise));
                if i <= cf.joint_order {
                    let size = value.abs().max(peeled.abs());
                    if size > noise {
                        discrepancy = discrepancy.max((value - peeled).abs() / size);
                    }
                }
                coefficients.push(FitCoefficient {
                    i,
                    j,
                    component: s,
                    value,
                    std_err,
                    peeled,
                    window_shift,
                    uncertainty,
                    significant: uncertainty.is_some_and(|u| value.abs() > cfg.significance * u),
                });
            }
        }
        worst = worst.max(residual);
        let log_detected = coefficients.iter().any(|c| c.j > 0 && c.significant);
        let verticality = coefficients
            .iter()
            .filter(|c| c.i == 1 && c.j == 0)
            .fold(0.0f64, |m, c| m.max(c.value.abs()));
        out.push(StationFit {
            y: st.y.clone(),
            coefficients,
            residual_norm: residual,
            condition,
            joint_order,
            peel_discrepancy: discrepancy,
            log_detected,
            verticality,
        });
    }
    Ok(ExpansionFit { n, codim: k, max_order: cfg.max_order, window: (lo, hi), stations: out, residual_norm: worst })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerticalityReport {
    pub pass: bool,
    pub tol: f64,
    pub max_c1: f64,
    /// `1 + |ĉ₁|²` per station, the implied `g_nn(y', 0)`.
    pub g_nn: Vec<f64>,
}

pub fn verticality_check(fit: &ExpansionFit, tol: f64) -> VerticalityReport {
    let g_nn: Vec<f64> = fit
        .stations
        .iter()
        .map(|st| {
            1.0 + st
                .coefficients
                .iter()
                .filter(|c| c.i == 1 && c.j == 0)
                .map(|c| c.value * c.value)
                .sum::<f64>()
        })
        .collect();
    let max_c1 = fit.stations.iter().fold(0.0f64, |m, s| m.max(s.verticality));
    VerticalityReport { pass: max_c1 <= tol, tol, max_c1, g_nn }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonRow {
    pub station: usize,
    pub i: u32,
    pub j: u32,
    pub component: usize,
    pub fitted: f64,
    pub std_err: f64,
    pub formal: f64,
    pub abs_err: f64,
    /// `abs_err / |formal|`, or `abs_err` when the formal value vanishes.
    pub rel_err: f64,
    /// Whether the formal value depends on the free coefficient `c_{n+1,0}`.
    pub depends_on_free: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Largest `abs_err` over rows independent of the free coefficient.
    pub max_abs_err: f64,
    pub max_rel_err: f64,
}

impl Comparison {
    pub fn row(&self, station: usize, i: u32, j: u32, s: usize) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.station == station && r.i == i && r.j == j && r.component == s)
    }
}

/// Compares fitted coefficients with the recursion at the fitted stations, for
/// orders up to `max_order`.
pub fn compare_fit_to_formal<S: Scalar>(
    fit: &ExpansionFit,
    res: &ExpansionResult<S>,
    max_order: u32,
) -> Result<Comparison, FitError> {
    if fit.n != res.spec.n {
        return Err(FitError::Mismatch("n"));
    }
    if fit.codim != res.spec.codim {
        return Err(FitError::Mismatch("codim"));
    }
    if fit.stations.iter().any(|s| s.y.len() != fit.n - 1) {
        return Err(FitError::Mismatch("station dimension"));
    }
    let m = (fit.n + 1) as u32;
    let mut rows = Vec::new();
    let (mut max_abs, mut max_rel) = (0.0f64, 0.0f64);
    for (si, st) in fit.stations.iter().enumerate() {
        for c in st.coefficients.iter().filter(|c| c.i <= max_order) {
            let formal = res.coeff_value(c.i, c.j, c.component, &st.y);
            let abs_err = (c.value - formal).abs();
            let rel_err = if formal != 0.0 { abs_err / formal.abs() } else { abs_err };
            let depends_on_free = c.i > m || (c.i == m && c.j == 0);
            if !depends_on_free {
                max_abs = max_abs.max(abs_err);
                max_rel = max_rel.max(rel_err);
            }
            rows.push(ComparisonRow {
                station: si,
                i: c.i,
                j: c.j,
                component: c.component,
                fitted: c.value,
                std_err: c.std_err,
                formal,
                abs_err,
                rel_err,
                depends_on_free,
            });
        }
    }
    Ok(Comparison { rows, max_abs_err: max_abs, max_rel_err: max_rel })
}

/// Fitted `ĉ_{n+1,0}` at one station, for seeding the free coefficient.
pub fn fitted_free_coeff(fit: &ExpansionFit, station: usize) -> Vec<f64> {
    let m = (fit.n + 1) as u32;
    (0..fit.codim).map(|s| fit.value(station, m, 0, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_slots() {
        let cfg = FitConfig { max_order: 7, ..FitConfig::default() };
        let b = fit_basis(3, &cfg);
        assert!(b.contains(&(4, 1)) && b.contains(&(7, 2)) && !b.contains(&(3, 1)) && !b.contains(&(6, 2)));
        let b = fit_basis(3, &FitConfig { logs: false, ..cfg });
        assert_eq!(b.len(), 7);
    }

    #[test]
    fn log_change_of_variables() {
        // 2 t² ln t + 3 t² sampled on [0.01, 0.2].
        let t = geometric_samples(0.01, 0.2, 30);
        let w: Vec<f64> = t.iter().map(|&x| 2.0 * x * x * math::ln(x) + 3.0 * x * x).collect();
        let f = local_fit(&[(2, 0), (2, 1)], &t, &w, 0.2).unwrap();
        assert!((f.coef[0] - 3.0).abs() < 1e-12 && (f.coef[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn narrow_window_names_the_pair() {
        let t = geometric_samples(0.1, 0.1 * (1.0 + 1e-14), 40);
        let st = Station::from_fn(vec![0.0], vec![0.0], &t, |x| vec![x * x * x]);
        let cfg = FitConfig { max_order: 3, lookahead: 0, window: Some((0.1, 0.1 * (1.0 + 1e-14))), ..FitConfig::default() };
        match fit_expansion(2, &[st], &cfg) {
            Err(FitError::IllConditioned { a, b, .. }) => assert_eq!((a, b), ((3, 0), (3, 1))),
            other => panic!("{other:?}"),
        }
    }
}
