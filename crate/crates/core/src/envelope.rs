//! Distances to a sampled asymptotic boundary `Γ ⊂ ℝ^{m−1}`, the normal-offset
//! function `δ(Q, r)` and the envelope `W`, the upper half-space minus every
//! ball `B((x₀, 0), d(x₀))` with `d = dist(·, Γ)`.
//!
//! Membership in `W` reduces to a height: `(x', t) ∈ W` iff `t ≥ τ(x')` where
//! `τ(x')² = sup_{x₀} (d(x₀)² − |x₀ − x'|²)`. In terms of `w = x₀ − x'` the
//! bracket equals `inf_{P∈Γ} (|x' − P|² + 2 w·(x' − P))`, an infimum of affine
//! maps, so it is concave in `w` and nested golden-section search finds `τ`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use serde::{Deserialize, Serialize};

use crate::math;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvelopeError {
    #[error("boundary has no samples")]
    Empty,
    #[error("shape mismatch: {0}")]
    Shape(&'static str),
    #[error("sample {index}: normal frame is not orthonormal")]
    Normals { index: usize },
    #[error("sample {index}: normal is not orthogonal to the neighbouring chord")]
    Tangency { index: usize },
    #[error("sample {index}: gap {gap:.3e} to its nearest neighbour exceeds the resolution {resolution:.3e}")]
    Spacing { index: usize, gap: f64, resolution: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(&'static str),
    #[error("sample index {0} out of range")]
    Index(usize),
}

/// Analytic one-parameter families, embedded in the first two coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind", deny_unknown_fields)]
pub enum Chart {
    /// `θ ↦ R (cos θ, sin θ)`.
    Circle { radius: f64 },
    /// `s ↦ (s, 0)`.
    Line,
    /// `s ↦ (s, c |s|^{1+α})`, of class `C^{1,α}` at the origin.
    Crease { c: f64, alpha: f64 },
}

impl Chart {
    fn planar(&self, p: f64) -> [f64; 2] {
        match *self {
            Chart::Circle { radius } => [radius * math::cos(p), radius * math::sin(p)],
            Chart::Line => [p, 0.0],
            Chart::Crease { c, alpha } => [p, c * math::powf(math::abs(p), 1.0 + alpha)],
        }
    }

    /// Unit normal in the plane: outward for the circle, `+e₂` side otherwise.
    fn planar_normal(&self, p: f64) -> [f64; 2] {
        match *self {
            Chart::Circle { .. } => [math::cos(p), math::sin(p)],
            Chart::Line => [0.0, 1.0],
            Chart::Crease { c, alpha } => {
                let slope = c * (1.0 + alpha) * math::signum(p) * math::powf(math::abs(p), alpha);
                let norm = math::sqrt(1.0 + slope * slope);
                if p == 0.0 {
                    [0.0, 1.0]
                } else {
                    [-slope / norm, 1.0 / norm]
                }
            }
        }
    }
}

/// A sampled `(n−1)`-dimensional boundary in `ℝ^{m−1}` with orthonormal normal
/// frames; the first normal of each frame is the distinguished `ν_Γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryManifold {
    ambient: usize,
    intrinsic: usize,
    points: Vec<f64>,
    normals: Vec<f64>,
    params: Vec<f64>,
    chart: Option<Chart>,
    closed: bool,
    alpha: f64,
    resolution: f64,
    scale: f64,
    /// Sample indices sorted by first coordinate, with the sorted keys.
    order: Vec<usize>,
    keys: Vec<f64>,
}

const FRAME_TOL: f64 = 1e-8;
/// Allowed `|ν · chord| / |chord|` towards the nearest neighbour.
const TANGENCY_TOL: f64 = 0.1;

impl BoundaryManifold {
    /// Circle of the given radius around the origin, `samples` equally spaced points.
    pub fn circle(ambient: usize, radius: f64, samples: usize) -> Result<Self, EnvelopeError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(EnvelopeError::Parameter("radius must be positive"));
        }
        let params = (0..samples).map(|j| 2.0 * PI * j as f64 / samples as f64).collect();
        Self::charted(ambient, Chart::Circle { radius }, params, true, 1.0)
    }

    /// Segment `[−L, L] × {0}`.
    pub fn line(ambient: usize, half_length: f64, samples: usize) -> Result<Self, EnvelopeError> {
        Self::charted(ambient, Chart::Line, uniform(half_length, samples)?, false, 1.0)
    }

    /// Crease `s ↦ (s, c|s|^{1+α})` for `|s| ≤ L`. An even sample count is
    /// raised by one so that the crease itself is a sample.
    pub fn crease(ambient: usize, c: f64, alpha: f64, half_length: f64, samples: usize) -> Result<Self, EnvelopeError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(EnvelopeError::Parameter("alpha must lie in (0, 1]"));
        }
        if !c.is_finite() {
            return Err(EnvelopeError::Parameter("crease amplitude must be finite"));
        }
        Self::charted(ambient, Chart::Crease { c, alpha }, uniform(half_length, samples | 1)?, false, alpha)
    }

    fn charted(ambient: usize, chart: Chart, params: Vec<f64>, closed: bool, alpha: f64) -> Result<Self, EnvelopeError> {
        if ambient < 2 {
            return Err(EnvelopeError::Parameter("charts need an ambient dimension of at least 2"));
        }
        if params.len() < 3 {
            return Err(EnvelopeError::Parameter("at least three samples are needed"));
        }
        let codim = ambient - 1;
        let mut points = Vec::with_capacity(params.len() * ambient);
        let mut normals = Vec::with_capacity(params.len() * codim * ambient);
        for &p in &params {
            let x = chart.planar(p);
            points.extend_from_slice(&x);
            points.extend(core::iter::repeat_n(0.0, ambient - 2));
            let nu = chart.planar_normal(p);
            normals.extend_from_slice(&nu);
            normals.extend(core::iter::repeat_n(0.0, ambient - 2));
            for e in 2..ambient {
                normals.extend((0..ambient).map(|c| if c == e { 1.0 } else { 0.0 }));
            }
        }
        let mut g = BoundaryManifold {
            ambient,
            intrinsic: 1,
            points,
            normals,
            params,
            chart: Some(chart),
            closed,
            alpha,
            resolution: 0.0,
            scale: 0.0,
            order: Vec::new(),
            keys: Vec::new(),
        };
        g.index();
        g.resolution = (0..g.len()).map(|i| g.gap(i)).fold(0.0, f64::max);
        Ok(g)
    }

    /// Point cloud with normal frames, `points` of shape `N × ambient` and
    /// `normals` of shape `N × (ambient − intrinsic) × ambient`.
    pub fn from_cloud(
        ambient: usize,
        intrinsic: usize,
        points: Vec<f64>,
        normals: Vec<f64>,
        alpha: f64,
        resolution: f64,
    ) -> Result<Self, EnvelopeError> {
        if intrinsic == 0 || intrinsic >= ambient {
            return Err(EnvelopeError::Parameter("intrinsic dimension must lie in 1..ambient"));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(EnvelopeError::Parameter("alpha must lie in (0, 1]"));
        }
        if !(resolution > 0.0) {
            return Err(EnvelopeError::Parameter("resolution must be positive"));
        }
        if points.is_empty() {
            return Err(EnvelopeError::Empty);
        }
        let codim = ambient - intrinsic;
        let count = points.len() / ambient;
        if points.len() != count * ambient || normals.len() != count * codim * ambient {
            return Err(EnvelopeError::Shape("points and normals do not match the dimensions"));
        }
        let mut g = BoundaryManifold {
            ambient,
            intrinsic,
            points,
            normals,
            params: Vec::new(),
            chart: None,
            closed: false,
            alpha,
            resolution,
            scale: 0.0,
            order: Vec::new(),
            keys: Vec::new(),
        };
        g.index();
        for i in 0..count {
            let frame = g.frame(i);
            for a in 0..codim {
                for b in 0..=a {
                    let d = dot(&frame[a * ambient..(a + 1) * ambient], &frame[b * ambient..(b + 1) * ambient]);
                    let want = if a == b { 1.0 } else { 0.0 };
                    if (d - want).abs() > FRAME_TOL {
                        return Err(EnvelopeError::Normals { index: i });
                    }
                }
            }
            if count > 1 {
                let (j, d2) = g.nearest_excluding(g.point(i), i);
                let gap = math::sqrt(d2);
                if gap > resolution {
                    return Err(EnvelopeError::Spacing { index: i, gap, resolution });
                }
                let chord: Vec<f64> = g.point(j).iter().zip(g.point(i)).map(|(a, b)| a - b).collect();
                for a in 0..codim {
                    if dot(&frame[a * ambient..(a + 1) * ambient], &chord).abs() > TANGENCY_TOL * gap {
                        return Err(EnvelopeError::Tangency { index: i });
                    }
                }
            }
        }
        Ok(g)
    }

    fn index(&mut self) {
        let a = self.ambient;
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&p, &q| self.points[p * a].total_cmp(&self.points[q * a]).then(p.cmp(&q)));
        self.keys = order.iter().map(|&p| self.points[p * a]).collect();
        self.order = order;
        let mut diam2 = 0.0f64;
        for c in 0..a {
            let (lo, hi) = (0..self.len())
                .map(|p| self.points[p * a + c])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
            diam2 += (hi - lo) * (hi - lo);
        }
        self.scale = math::sqrt(diam2).max(f64::MIN_POSITIVE);
    }

    fn gap(&self, i: usize) -> f64 {
        math::sqrt(self.nearest_excluding(self.point(i), i).1)
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.ambient
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `m − 1`.
    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    /// `n − 1`.
    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic
    }

    pub fn codim(&self) -> usize {
        self.ambient - self.intrinsic
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Largest nearest-neighbour spacing (charts) or the declared bound (clouds).
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Diameter of the bounding box.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn chart(&self) -> Option<Chart> {
        self.chart
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.ambient..(i + 1) * self.ambient]
    }

    /// All normals of sample `i`, row by row.
    pub fn frame(&self, i: usize) -> &[f64] {
        let s = self.codim() * self.ambient;
        &self.normals[i * s..(i + 1) * s]
    }

    /// The distinguished normal `ν_Γ` at sample `i`.
    pub fn normal(&self, i: usize) -> &[f64] {
        &self.frame(i)[..self.ambient]
    }

    /// Chart parameter of sample `i`.
    pub fn param(&self, i: usize) -> Option<f64> {
        self.params.get(i).copied()
    }

    /// Sample closest to the given chart parameter.
    pub fn sample_at(&self, param: f64) -> Option<usize> {
        self.params
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - param).abs().total_cmp(&(b.1 - param).abs()))
            .map(|(i, _)| i)
    }

    /// Nearest sample and its squared distance, sweeping outwards in the first
    /// coordinate and stopping once that coordinate alone exceeds the best distance.
    pub fn nearest_sample(&self, x: &[f64]) -> (usize, f64) {
        self.nearest_excluding(x, usize::MAX)
    }

    fn nearest_excluding(&self, x: &[f64], skip: usize) -> (usize, f64) {
        let a = self.ambient;
        let key = x[0];
        let n = self.keys.len();
        let start = self.keys.partition_point(|&k| k < key);
        let (mut lo, mut hi) = (start, start);
        let mut best = (usize::MAX, f64::INFINITY);
        loop {
            let dl = if lo > 0 { key - self.keys[lo - 1] } else { f64::INFINITY };
            let dh = if hi < n { self.keys[hi] - key } else { f64::INFINITY };
            let (gap, slot) = if dl <= dh { (dl, lo.wrapping_sub(1)) } else { (dh, hi) };
            if !gap.is_finite() || gap * gap > best.1 {
                break;
            }
            if dl <= dh {
                lo -= 1;
            } else {
                hi += 1;
            }
            let p = self.order[slot];
            if p == skip {
                continue;
            }
            let d2: f64 = self.points[p * a..(p + 1) * a].iter().zip(x).map(|(u, v)| (u - v) * (u - v)).sum();
            if d2 < best.1 || (d2 == best.1 && p < best.0) {
                best = (p, d2);
            }
        }
        best
    }
}

fn uniform(half_length: f64, samples: usize) -> Result<Vec<f64>, EnvelopeError> {
    if !(half_length > 0.0 && half_length.is_finite()) {
        return Err(EnvelopeError::Parameter("half length must be positive"));
    }
    if samples < 3 {
        return Err(EnvelopeError::Parameter("at least three samples are needed"));
    }
    Ok((0..samples)
        .map(|j| -half_length + 2.0 * half_length * j as f64 / (samples - 1) as f64)
        .collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimum of `f` on `[a, b]` by golden-section search, with the endpoints included.
fn golden_min(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, width: f64) -> (f64, f64) {
    let (fa, fb) = (f(a), f(b));
    let mut best = if fa <= fb { (a, fa) } else { (b, fb) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= width {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Distance from a query to `Γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Distance {
    pub distance: f64,
    /// Nearest sample.
    pub nearest: usize,
    /// Closest point of `Γ` found.
    pub foot: Vec<f64>,
    /// The local refinement was unavailable and the sample distance is returned.
    pub coarse: bool,
}

impl BoundaryManifold {
    /// `dist(x, Γ)` for `x` in the boundary plane (`m − 1` coordinates) or in
    /// the ambient space (`m` coordinates, the last one the height).
    ///
    /// The nearest sample is refined on the chart by golden-section search over
    /// the two adjacent parameter intervals; clouds use the tangent plane of the
    /// nearest sample while the foot stays within the resolution.
    pub fn dist_to_gamma(&self, x: &[f64]) -> Result<Distance, EnvelopeError> {
        let a = self.ambient;
        if self.is_empty() {
            return Err(EnvelopeError::Empty);
        }
        if x.len() != a && x.len() != a + 1 {
            return Err(EnvelopeError::Shape("query must have m − 1 or m coordinates"));
        }
        let mut out = self.plane_distance(&x[..a]);
        if x.len() == a + 1 {
            out.distance = math::hypot(out.distance, x[a]);
        }
        Ok(out)
    }

    fn plane_distance(&self, x: &[f64]) -> Distance {
        let a = self.ambient;
        let (i, d2) = self.nearest_sample(x);
        let sample = Distance { distance: math::sqrt(d2), nearest: i, foot: self.point(i).to_vec(), coarse: false };
        match self.chart {
            Some(chart) => {
                let n = self.len();
                let p = self.params[i];
                let period = 2.0 * PI;
                let neighbour = |j: isize| -> Option<f64> {
                    if self.closed {
                        let k = ((i as isize + j).rem_euclid(n as isize)) as usize;
                        let mut q = self.params[k];
                        if j < 0 && q > p {
                            q -= period;
                        }
                        if j > 0 && q < p {
                            q += period;
                        }
                        Some(q)
                    } else {
                        let k = i as isize + j;
                        (k >= 0 && (k as usize) < n).then(|| self.params[k as usize])
                    }
                };
                let mut buf = vec![0.0; a];
                let mut eval = |q: f64| {
                    let y = chart.planar(q);
                    buf[..2].copy_from_slice(&y);
                    dist2(&buf, x)
                };
                let mut best = (p, d2);
                for side in [neighbour(-1), neighbour(1)].into_iter().flatten() {
                    let (lo, hi) = if side < p { (side, p) } else { (p, side) };
                    let width = 1e-15 * (1.0 + lo.abs().max(hi.abs()));
                    let cand = golden_min(&mut eval, lo, hi, width);
                    if cand.1 < best.1 {
                        best = cand;
                    }
                }
                let mut foot = vec![0.0; a];
                foot[..2].copy_from_slice(&chart.planar(best.0));
                Distance { distance: math::sqrt(best.1), nearest: i, foot, coarse: false }
            }
            None => {
                let frame = self.frame(i);
                let base = self.point(i);
                let v: Vec<f64> = x.iter().zip(base).map(|(u, b)| u - b).collect();
                let mut normal_part = vec![0.0; a];
                for l in 0..self.codim() {
                    let nu = &frame[l * a..(l + 1) * a];
                    let c = dot(&v, nu);
                    for (o, e) in normal_part.iter_mut().zip(nu) {
                        *o += c * e;
                    }
                }
                let tangential: f64 = v.iter().zip(&normal_part).map(|(u, w)| (u - w) * (u - w)).sum();
                if math::sqrt(tangential) > self.resolution {
                    return Distance { coarse: true, ..sample };
                }
                let foot = x.iter().zip(&normal_part).map(|(u, w)| u - w).collect();
                Distance { distance: math::sqrt(dot(&normal_part, &normal_part)), nearest: i, foot, coarse: false }
            }
        }
    }
}

/// `δ(Q, r)` with both offsets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Delta {
    pub r: f64,
    pub delta: f64,
    /// `dist(Q + rν, Γ)`.
    pub plus: f64,
    /// `dist(Q − rν, Γ)`.
    pub minus: f64,
    pub coarse: bool,
}

/// `δ(Q, r) = min(dist(Q + rν, Γ), dist(Q − rν, Γ))` at sample `q`.
pub fn delta_q_r(g: &BoundaryManifold, q: usize, r: f64) -> Result<Delta, EnvelopeError> {
    if q >= g.len() {
        return Err(EnvelopeError::Index(q));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(EnvelopeError::Parameter("r must be positive"));
    }
    let (base, nu) = (g.point(q), g.normal(q));
    let shifted = |s: f64| -> Vec<f64> { base.iter().zip(nu).map(|(b, v)| b + s * v).collect() };
    let plus = g.dist_to_gamma(&shifted(r))?;
    let minus = g.dist_to_gamma(&shifted(-r))?;
    // `Q` itself lies on Γ, so neither offset is farther than `r`.
    let (plus_d, minus_d) = (plus.distance.min(r), minus.distance.min(r));
    Ok(Delta {
        r,
        delta: plus_d.min(minus_d),
        plus: plus_d,
        minus: minus_d,
        coarse: plus.coarse || minus.coarse,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Too few samples above the noise level for a slope.
    Inconclusive,
    /// No sample above the noise level: `δ = r` to working precision.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeficitSample {
    pub r: f64,
    pub delta: f64,
    /// `1 − δ/r`.
    pub deficit: f64,
}

/// Log-log fit of the deficit `1 − δ(Q, r)/r` against `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeficitFit {
    pub slope: Option<f64>,
    pub constant: Option<f64>,
    /// `2α/(1 − α)`, absent for `α = 1`.
    pub target: Option<f64>,
    pub verdict: Verdict,
    pub samples: Vec<DeficitSample>,
}

/// Least-squares line `log y = log C + p log x`; returns `(p, C)`.
fn loglog(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (math::ln(x), math::ln(y))).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let p = sxy / sxx;
    Some((p, math::exp(my - p * mx)))
}

/// The deficit decays at least like `r^{2α/(1−α)}`; the fit passes when its
/// slope reaches 80% of that rate. Deficits at or below `noise` are not fitted.
pub fn envelope_exponent_fit(
    g: &BoundaryManifold,
    q: usize,
    r_samples: &[f64],
    noise: f64,
) -> Result<DeficitFit, EnvelopeError> {
    let mut samples = Vec::with_capacity(r_samples.len());
    for &r in r_samples {
        let d = delta_q_r(g, q, r)?;
        samples.push(DeficitSample { r, delta: d.delta, deficit: 1.0 - d.delta / r });
    }
    let alpha = g.alpha();
    let target = (alpha < 1.0).then(|| 2.0 * alpha / (1.0 - alpha));
    let above: Vec<(f64, f64)> = samples.iter().filter(|s| s.deficit > noise).map(|s| (s.r, s.deficit)).collect();
    let fit = loglog(&above);
    let verdict = match (above.len(), target, fit) {
        (0, _, _) => Verdict::Exact,
        (_, None, _) => Verdict::Fail,
        (_, Some(_), None) => Verdict::Inconclusive,
        (_, Some(p), Some((slope, _))) => {
            if slope >= 0.8 * p {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        }
    };
    Ok(DeficitFit { slope: fit.map(|f| f.0), constant: fit.map(|f| f.1), target, verdict, samples })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct EnvelopeConfig {
    /// Ball centres are searched within this horizontal distance of the query;
    /// `None` means the diameter of `Γ`'s bounding box.
    pub search_radius: Option<f64>,
    /// Relative search tolerance, in units of the search radius.
    pub tol: f64,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        EnvelopeConfig { search_radius: None, tol: 1e-11 }
    }
}

/// Lower edge of `W` above a boundary-plane point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EnvelopeHeight {
    /// `τ(x')`; infinite when the supremum is not attained inside the search region.
    pub height: f64,
    /// Centre of the extremal ball.
    pub center: Vec<f64>,
    pub unbounded: bool,
}

/// `τ(x')` by nested golden-section search over ball centres `x' + w`.
pub fn envelope_height(g: &BoundaryManifold, x: &[f64], cfg: &EnvelopeConfig) -> Result<EnvelopeHeight, EnvelopeError> {
    let a = g.ambient_dim();
    if x.len() != a {
        return Err(EnvelopeError::Shape("boundary-plane point must have m − 1 coordinates"));
    }
    if g.is_empty() {
        return Err(EnvelopeError::Empty);
    }
    let radius = cfg.search_radius.unwrap_or(g.scale());
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(EnvelopeError::Parameter("search radius must be positive"));
    }
    let mut center = x.to_vec();
    let mut objective = |c: &[f64]| -> f64 {
        let d = g.plane_distance(c).distance;
        d * d - dist2(c, x)
    };
    let width = cfg.tol * radius;
    let best = nested_max(&mut objective, &mut center, x, 0, radius, width);
    // On the box edge, concavity makes growth along the ray decisive; a flat ray
    // (as above a point of Γ) is a bounded maximum.
    let on_edge = center.iter().zip(x).any(|(c, o)| (c - o).abs() >= radius * (1.0 - 1e-6));
    let unbounded = on_edge && {
        let beyond: Vec<f64> = center.iter().zip(x).map(|(c, o)| o + 2.0 * (c - o)).collect();
        objective(&beyond) > best + 1e-12 * radius * radius
    };
    Ok(EnvelopeHeight {
        height: if unbounded { f64::INFINITY } else { math::sqrt(best.max(0.0)) },
        center,
        unbounded,
    })
}

/// Maximises a concave function over the box `origin ± radius`, one coordinate
/// at a time with the remaining ones maximised inside. Leaves the maximiser in `w`.
fn nested_max(
    f: &mut dyn FnMut(&[f64]) -> f64,
    w: &mut Vec<f64>,
    origin: &[f64],
    level: usize,
    radius: f64,
    width: f64,
) -> f64 {
    if level == w.len() {
        return f(w);
    }
    let mut best_w = w.clone();
    let mut best = f64::NEG_INFINITY;
    let mut probe = |coord: f64, w: &mut Vec<f64>| -> f64 {
        w[level] = coord;
        let v = nested_max(f, w, origin, level + 1, radius, width);
        if v > best {
            best = v;
            best_w.clone_from(w);
        }
        -v
    };
    let (lo, hi) = (origin[level] - radius, origin[level] + radius);
    let mut scratch = w.clone();
    golden_min(|c| probe(c, &mut scratch), lo, hi, width);
    w.clone_from(&best_w);
    best
}

/// Membership of an ambient point in `W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Membership {
    pub inside: bool,
    /// `x^m − τ(x')`: positive inside, negative when some ball swallows the point.
    pub margin: f64,
    pub height: EnvelopeHeight,
    /// `|margin|` is within the search tolerance.
    pub indeterminate: bool,
}

/// Whether `x = (x', x^m)` avoids every ball `B((x₀, 0), d(x₀))`.
pub fn in_w(g: &BoundaryManifold, x: &[f64], cfg: &EnvelopeConfig) -> Result<Membership, EnvelopeError> {
    let a = g.ambient_dim();
    if x.len() != a + 1 {
        return Err(EnvelopeError::Shape("ambient point must have m coordinates"));
    }
    let t = x[a];
    if !(t > 0.0) {
        return Err(EnvelopeError::Parameter("point must lie above the boundary plane"));
    }
    let height = envelope_height(g, &x[..a], cfg)?;
    let margin = t - height.height;
    let slack = 1e3 * cfg.tol * cfg.search_radius.unwrap_or(g.scale());
    Ok(Membership { inside: margin >= 0.0, margin, indeterminate: margin.abs() <= slack, height })
}

/// The `r` with `(x', 0) = Q + r ν_Γ(Q)` for the nearest point `Q`, compared with `(x^m)^{1+α}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NormalOffset {
    pub r: f64,
    pub height: f64,
    pub foot: Vec<f64>,
    /// `r / (x^m)^{1+α}`.
    pub ratio: f64,
}

impl NormalOffset {
    /// `r < C (x^m)^{1+α}`.
    pub fn within(&self, c: f64) -> bool {
        self.ratio < c
    }
}

pub fn normal_offset(g: &BoundaryManifold, x: &[f64]) -> Result<NormalOffset, EnvelopeError> {
    let a = g.ambient_dim();
    if x.len() != a + 1 {
        return Err(EnvelopeError::Shape("ambient point must have m coordinates"));
    }
    let t = x[a];
    if !(t > 0.0) {
        return Err(EnvelopeError::Parameter("point must lie above the boundary plane"));
    }
    let d = g.dist_to_gamma(&x[..a])?;
    Ok(NormalOffset { r: d.distance, height: t, foot: d.foot, ratio: d.distance / math::powf(t, 1.0 + g.alpha()) })
}

/// Smallest `C` with `r ≤ C (x^m)^{1+α}` over the given offsets.
pub fn calibrate_offset_constant(offsets: &[NormalOffset]) -> f64 {
    offsets.iter().map(|o| o.ratio).fold(0.0, f64::max)
}

/// Edge of `W` along the normal ray at a sample: heights `τ(Q + rν)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OffsetFit {
    /// Slope of `log |r|` against `log τ`.
    pub slope: Option<f64>,
    pub constant: Option<f64>,
    /// `1 + α`.
    pub target: f64,
    /// `(r, τ)` pairs with a finite edge.
    pub samples: Vec<(f64, f64)>,
    pub verdict: Verdict,
}

/// Offsets `r` (signed along `ν_Γ`) against the height of `W`'s edge above
/// `Q + rν`; the exponent passes within 20% of `1 + α`.
pub fn envelope_offset_exponent(
    g: &BoundaryManifold,
    q: usize,
    offsets: &[f64],
    cfg: &EnvelopeConfig,
) -> Result<OffsetFit, EnvelopeError> {
    if q >= g.len() {
        return Err(EnvelopeError::Index(q));
    }
    let (base, nu) = (g.point(q).to_vec(), g.normal(q).to_vec());
    let mut samples = Vec::with_capacity(offsets.len());
    for &r in offsets {
        let x: Vec<f64> = base.iter().zip(&nu).map(|(b, v)| b + r * v).collect();
        let h = envelope_height(g, &x, cfg)?;
        if h.height.is_finite() && h.height > 0.0 && r != 0.0 {
            samples.push((r, h.height));
        }
    }
    let target = 1.0 + g.alpha();
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(r, h)| (h, r.abs())).collect();
    let fit = loglog(&pts);
    let verdict = match fit {
        None => Verdict::Inconclusive,
        Some((slope, _)) if (slope - target).abs() <= 0.2 * target => Verdict::Pass,
        Some(_) => Verdict::Fail,
    };
    Ok(OffsetFit { slope: fit.map(|f| f.0), constant: fit.map(|f| f.1), target, samples, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, v) = golden_min(|x| (x - 0.3) * (x - 0.3), -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-8 && v < 1e-16);
    }

    #[test]
    fn sweep_matches_scan() {
        let g = BoundaryManifold::circle(2, 1.0, 97).unwrap();
        for q in [[0.3, -0.2], [2.0, 0.1], [-0.7, 0.7]] {
            let (i, d2) = g.nearest_sample(&q);
            let scan = (0..g.len()).map(|j| dist2(g.point(j), &q)).fold(f64::INFINITY, f64::min);
            assert_eq!(d2, scan);
            assert_eq!(dist2(g.point(i), &q), scan);
        }
    }

    #[test]
    fn crease_contains_its_vertex() {
        let g = BoundaryManifold::crease(2, 1.0, 0.5, 1.0, 100).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g.point(50), &[0.0, 0.0]);
        assert_eq!(g.normal(50), &[0.0, 1.0]);
    }

    #[test]
    fn loglog_recovers_power() {
        let pts: Vec<(f64, f64)> = [0.1, 0.2, 0.4].iter().map(|&x: &f64| (x, 3.0 * x.powf(1.5))).collect();
        let (p, c) = loglog(&pts).unwrap();
        assert!((p - 1.5).abs() < 1e-12 && (c - 3.0).abs() < 1e-12);
    }
}
