//! The coefficient recursion.
//!
//! Acting on `c t^i L^j` (`L = log t`), the leading part `t²∂_t² − n t ∂_t` of the
//! scaled operator gives `i(i−n−1) c t^i L^j + j(2i−n−1) c t^i L^{j−1} + j(j−1) c t^i L^{j−2}`.
//! Everything else that involves `c_{i,j}` lands at order `t^{i+1}` or higher, so
//! each order is solved from the residual of the partial sum below it.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::geometry::{gradient_series, scaled_second, GeometryError, SeriesMat};
use crate::series::{Axis, LogSeries, PolyJet, Scalar, SeriesError, VectorLogSeries};

use super::{checks, ExpansionError, ExpansionResult, ProblemSpec};

const MAX_CAP_RAISES: usize = 4;

/// Runs the recursion up to `spec.trunc_order`.
pub fn expand<S: Scalar>(spec: &ProblemSpec<S>) -> Result<ExpansionResult<S>, ExpansionError> {
    spec.validate()?;
    let n = spec.n;
    let k = spec.trunc_order;
    let mut cap = spec.log_cap.unwrap_or_else(|| spec.default_log_cap());
    let mut u: Vec<LogSeries<S>> = spec
        .phi
        .iter()
        .map(|p| LogSeries::from_jet(p.clone(), k, cap))
        .collect();
    let mut coeffs: BTreeMap<(u32, u32), Vec<PolyJet<S>>> = BTreeMap::new();
    let zero_jet = PolyJet::zero(n - 1, spec.jet_degree);

    for p in 1..=k {
        let mut raises = 0;
        let layers = loop {
            match solve_order(&u, spec, p) {
                Ok(l) => break l,
                Err(ExpansionError::Series(SeriesError::LogOverflow { .. }))
                | Err(ExpansionError::Geometry(GeometryError::Series(SeriesError::LogOverflow { .. })))
                    if raises < MAX_CAP_RAISES =>
                {
                    raises += 1;
                    cap = 2 * cap + 1;
                    u = u.iter().map(|c| c.with_log_cap(cap)).collect::<Result<_, _>>()?;
                }
                Err(ExpansionError::Series(SeriesError::LogOverflow { .. }))
                | Err(ExpansionError::Geometry(GeometryError::Series(SeriesError::LogOverflow { .. }))) => {
                    return Err(ExpansionError::LogCap { cap })
                }
                Err(e) => return Err(e),
            }
        };
        // layers[s]: log power → jet for component s.
        let mut js: Vec<u32> = layers.iter().flat_map(|m| m.keys().copied()).collect();
        js.push(0);
        js.sort_unstable();
        js.dedup();
        for &j in &js {
            let mut per = Vec::with_capacity(spec.codim);
            for (s, layer) in layers.iter().enumerate() {
                let c = layer.get(&j).cloned().unwrap_or_else(|| zero_jet.clone());
                if !c.is_zero() {
                    if j > cap {
                        cap = j.max(2 * cap + 1);
                        u = u.iter().map(|c| c.with_log_cap(cap)).collect::<Result<_, _>>()?;
                    }
                    u[s].set(p, j, c.clone())?;
                }
                per.push(c);
            }
            if j == 0 || per.iter().any(|c| !c.is_zero()) {
                coeffs.insert((p, j), per);
            }
        }
    }

    let u = VectorLogSeries::new(u)?;
    let residual = fast_residual(&u, k + 1)?;
    let mut res = ExpansionResult {
        spec: spec.clone(),
        u,
        coeffs,
        residual,
        log_cap: cap,
        structure: Default::default(),
    };
    res.structure = checks::structure_check(&res);
    Ok(res)
}

/// Solves for the slots at order `p`, given `u` complete below `p`.
fn solve_order<S: Scalar>(
    u: &[LogSeries<S>],
    spec: &ProblemSpec<S>,
    p: u32,
) -> Result<Vec<BTreeMap<u32, PolyJet<S>>>, ExpansionError> {
    let n = spec.n as i64;
    let pi = p as i64;
    let vu = VectorLogSeries::new(u.iter().map(|c| c.with_t_order(p)).collect())?;
    let residual = residual_layer(&vu, p)?;
    let mut out = Vec::with_capacity(u.len());
    for (s, r) in residual.into_iter().enumerate() {
        let mut c: BTreeMap<u32, PolyJet<S>> = BTreeMap::new();
        let top = r.keys().next_back().copied();
        if pi == n + 1 {
            // Resonant order: level j fixes c_{j+1}; c_0 is free.
            if let Some(top) = top {
                for j in (0..=top).rev() {
                    let mut acc = r.get(&j).cloned().unwrap_or_else(|| zero_like(u));
                    if let Some(c2) = c.get(&(j + 2)) {
                        acc = acc.add(&c2.scale(&S::from_int(((j + 2) * (j + 1)) as i64)))?;
                    }
                    let d = S::from_int((j as i64 + 1) * (n + 1));
                    let v = acc.scale(&d.recip().expect("nonzero")).neg();
                    if !v.is_zero() {
                        c.insert(j + 1, v);
                    }
                }
            }
            let free = spec.free_coeff[s].clone();
            if !free.is_zero() {
                c.insert(0, free);
            }
            verify_layer(&r, &c, p, spec.n)?;
        } else if let Some(top) = top {
            let lead = S::from_int(pi * (pi - n - 1));
            let lead_inv = lead.recip().expect("nonresonant order");
            for j in (0..=top).rev() {
                let mut acc = r.get(&j).cloned().unwrap_or_else(|| zero_like(u));
                if let Some(c1) = c.get(&(j + 1)) {
                    acc = acc.add(&c1.scale(&S::from_int((j as i64 + 1) * (2 * pi - n - 1))))?;
                }
                if let Some(c2) = c.get(&(j + 2)) {
                    acc = acc.add(&c2.scale(&S::from_int(((j + 2) * (j + 1)) as i64)))?;
                }
                let v = acc.scale(&lead_inv).neg();
                if !v.is_zero() {
                    c.insert(j, v);
                }
            }
            verify_layer(&r, &c, p, spec.n)?;
        }
        out.push(c);
    }
    Ok(out)
}

fn zero_like<S: Scalar>(u: &[LogSeries<S>]) -> PolyJet<S> {
    PolyJet::zero(u[0].num_vars(), u[0].max_degree())
}

/// Checks `L(c) + r = 0` at every log level of order `p`.
fn verify_layer<S: Scalar>(
    r: &BTreeMap<u32, PolyJet<S>>,
    c: &BTreeMap<u32, PolyJet<S>>,
    p: u32,
    n: usize,
) -> Result<(), ExpansionError> {
    let (pi, ni) = (p as i64, n as i64);
    let mut levels: Vec<u32> = r.keys().chain(c.keys()).copied().collect();
    levels.sort_unstable();
    levels.dedup();
    for &l in &levels {
        let mut acc = match r.get(&l) {
            Some(v) => v.clone(),
            None => match c.values().next() {
                Some(v) => PolyJet::zero(v.num_vars(), v.max_degree()),
                None => return Ok(()),
            },
        };
        if let Some(v) = c.get(&l) {
            acc = acc.add(&v.scale(&S::from_int(pi * (pi - ni - 1))))?;
        }
        if let Some(v) = c.get(&(l + 1)) {
            acc = acc.add(&v.scale(&S::from_int((l as i64 + 1) * (2 * pi - ni - 1))))?;
        }
        if let Some(v) = c.get(&(l + 2)) {
            acc = acc.add(&v.scale(&S::from_int((l as i64 + 2) * (l as i64 + 1))))?;
        }
        if acc.max_abs() > tolerance::<S>(r) {
            return Err(ExpansionError::Inconsistent {
                i: p,
                j: l,
                detail: format!("level does not close: {:?}", acc),
            });
        }
    }
    Ok(())
}

fn tolerance<S: Scalar>(r: &BTreeMap<u32, PolyJet<S>>) -> f64 {
    match S::MODE {
        crate::series::ScalarMode::ExactRational => 0.0,
        crate::series::ScalarMode::Float64 => {
            1e-10 * r.values().map(|v| v.max_abs()).fold(1.0, f64::max)
        }
    }
}

/// Metric inverse through `g⁻¹ = I − Du (I_k + Duᵀ Du)⁻¹ Duᵀ`, all entries at `order`.
fn woodbury_inverse<S: Scalar>(du: &SeriesMat<S>, order: u32) -> Result<SeriesMat<S>, ExpansionError> {
    let n = du.rows();
    let k = du.cols();
    let d = du.map(|e| e.with_t_order(order));
    let dt = d.transpose();
    let s = SeriesMat::identity(k, d.get(0, 0)).add(&dt.gram_rows()?)?;
    let (s_inv, _) = s.inverse_and_det()?;
    let w = d.mul(&s_inv)?;
    let mut out = SeriesMat::zeros(n, n, d.get(0, 0));
    for i in 0..n {
        for j in 0..=i {
            let mut acc = if i == j { d.get(0, 0).one_like() } else { d.get(0, 0).zero_like() };
            for l in 0..k {
                acc = acc.sub(&w.get(i, l).mul(d.get(j, l))?)?;
            }
            out.set(j, i, acc.clone());
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

/// Scaled second derivatives `t² ∂_i∂_j u_s`, upper triangle, per component.
fn scaled_hessians<S: Scalar>(du: &SeriesMat<S>) -> Result<Vec<Vec<LogSeries<S>>>, SeriesError> {
    let n = du.rows();
    let mut out = Vec::with_capacity(du.cols());
    for s in 0..du.cols() {
        let mut h = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                let axis = if j + 1 == n { Axis::T } else { Axis::Tangential(j) };
                h.push(scaled_second(du.get(i, s), axis)?);
            }
        }
        out.push(h);
    }
    Ok(out)
}

/// Slots at order `p` of the scaled residual; `u` must be complete below `p`.
fn residual_layer<S: Scalar>(
    u: &VectorLogSeries<S>,
    p: u32,
) -> Result<Vec<BTreeMap<u32, PolyJet<S>>>, ExpansionError> {
    let du = gradient_series(u)?;
    let n = du.rows();
    let ginv = woodbury_inverse(&du, p.saturating_sub(2))?;
    let hs = scaled_hessians(&du)?;
    let mut out = Vec::with_capacity(u.codim());
    for (s, us) in u.components().iter().enumerate() {
        let mut layer: BTreeMap<u32, PolyJet<S>> = us
            .euler()
            .scale(&S::from_int(-(n as i64)))
            .layer(p);
        let mut idx = 0;
        for i in 0..n {
            for j in i..n {
                let prod = ginv.get(i, j).product_layer(&hs[s][idx], p)?;
                idx += 1;
                let two = S::from_int(2);
                for (lj, c) in prod {
                    let c = if i != j { c.scale(&two) } else { c };
                    let slot = layer
                        .entry(lj)
                        .or_insert_with(|| PolyJet::zero(c.num_vars(), c.max_degree()));
                    *slot = slot.add(&c)?;
                }
            }
        }
        layer.retain(|_, c| !c.is_zero());
        out.push(layer);
    }
    Ok(out)
}

/// The scaled residual `t² g^{ij} u_{s,ij} − n t u_{s,t}` up to `order`, through
/// the `k × k` Woodbury inverse (the recursion's own route).
pub fn fast_residual<S: Scalar>(
    u: &VectorLogSeries<S>,
    order: u32,
) -> Result<VectorLogSeries<S>, ExpansionError> {
    let comps: Vec<LogSeries<S>> = u.components().iter().map(|c| c.with_t_order(order)).collect();
    let u = VectorLogSeries::new(comps)?;
    let du = gradient_series(&u)?;
    let n = du.rows();
    let ginv = woodbury_inverse(&du, order.saturating_sub(2))?;
    let hs = scaled_hessians(&du)?;
    let mut out = Vec::with_capacity(u.codim());
    for (s, us) in u.components().iter().enumerate() {
        let mut acc = us.euler().scale(&S::from_int(-(n as i64)));
        let mut idx = 0;
        for i in 0..n {
            for j in i..n {
                let factor = if i != j { S::from_int(2) } else { S::one() };
                for p in 0..=order {
                    for (lj, c) in ginv.get(i, j).product_layer(&hs[s][idx], p)? {
                        acc.add_term(p, lj, &c.scale(&factor))?;
                    }
                }
                idx += 1;
            }
        }
        out.push(acc);
    }
    Ok(VectorLogSeries::new(out)?)
}

/// Expansion re-centred at the station `y0`: the coefficient jets of the result
/// are Taylor jets about `y0`, so their constant terms are the values there.
pub fn expand_at_station<S: Scalar>(
    spec: &ProblemSpec<S>,
    y0: &[S],
) -> Result<ExpansionResult<S>, ExpansionError> {
    let mut local = spec.clone();
    local.phi = spec.phi.iter().map(|p| p.recenter(y0)).collect();
    local.free_coeff = spec.free_coeff.iter().map(|p| p.recenter(y0)).collect();
    expand(&local)
}
