//! Residual frontier and structural scans of an expansion.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::q_operator_series;
use crate::series::{Scalar, ScalarMode};

use super::{ExpansionError, ExpansionResult};

/// Verdict of one structural claim.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CheckOutcome {
    Pass,
    Fail,
    #[default]
    NotApplicable,
}

impl CheckOutcome {
    fn from_bool(ok: bool) -> Self {
        if ok {
            CheckOutcome::Pass
        } else {
            CheckOutcome::Fail
        }
    }

    pub fn passed(self) -> bool {
        self != CheckOutcome::Fail
    }
}

/// Structural claims about the coefficient table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase")]
pub struct StructureReport {
    /// `c_{1,0} = 0`.
    pub vertical_tangency: CheckOutcome,
    /// `c_{i,0} = 0` for odd `3 ≤ i ≤ n`.
    pub odd_parity: CheckOutcome,
    /// `j ≤ ⌊(i−1)/n⌋` for every nonzero slot.
    pub log_cap: CheckOutcome,
    /// Even `n`: no nonzero log slot. Not applicable for odd `n`.
    pub even_log_free: CheckOutcome,
    /// Every nonzero log slot has `i ≥ n + 1`.
    pub first_log_index: CheckOutcome,
    /// Lowest nonzero log slot, if any.
    pub first_log: Option<(u32, u32)>,
    /// `c_{n+1,1} = 0` (the log-free criterion at the resonant order).
    pub resonant_log_free: bool,
    /// Slots that broke a check, for diagnostics.
    pub offending: Vec<(u32, u32)>,
}

impl StructureReport {
    pub fn all_passed(&self) -> bool {
        [
            self.vertical_tangency,
            self.odd_parity,
            self.log_cap,
            self.even_log_free,
            self.first_log_index,
        ]
        .iter()
        .all(|c| c.passed())
    }
}

/// Scans the table of a completed expansion.
pub fn structure_check<S: Scalar>(res: &ExpansionResult<S>) -> StructureReport {
    let n = res.spec.n as u32;
    let zero = |i: u32, j: u32| res.coeffs.get(&(i, j)).map(|v| v.iter().all(|c| c.is_zero())).unwrap_or(true);
    let mut offending = Vec::new();

    let vertical = zero(1, 0);
    if !vertical {
        offending.push((1, 0));
    }
    let mut parity = true;
    for i in (3..=n).step_by(2) {
        if !zero(i, 0) {
            parity = false;
            offending.push((i, 0));
        }
    }
    let mut cap_ok = true;
    let mut first_ok = true;
    let mut first_log = None;
    for (&(i, j), v) in &res.coeffs {
        if j == 0 || v.iter().all(|c| c.is_zero()) {
            continue;
        }
        if first_log.is_none() {
            first_log = Some((i, j));
        }
        if j > (i - 1) / n {
            cap_ok = false;
            offending.push((i, j));
        }
        if i < n + 1 {
            first_ok = false;
        }
    }
    let even = if n.is_multiple_of(2) {
        CheckOutcome::from_bool(first_log.is_none())
    } else {
        CheckOutcome::NotApplicable
    };
    StructureReport {
        vertical_tangency: CheckOutcome::from_bool(vertical),
        odd_parity: CheckOutcome::from_bool(parity),
        log_cap: CheckOutcome::from_bool(cap_ok),
        even_log_free: even,
        first_log_index: CheckOutcome::from_bool(first_ok),
        first_log,
        resonant_log_free: zero(n + 1, 1),
        offending,
    }
}

/// Outcome of re-substituting `T_K` into an independently assembled `Q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResidualReport {
    pub trunc_order: u32,
    /// Every slot with `i ≤ K` vanished (exactly in rational mode).
    pub frontier_clean: bool,
    /// The re-substituted residual equals the one stored by the recursion.
    pub routes_agree: bool,
    /// Lowest surviving slot `(i, j)`, its size and whether `j ≤ ⌊(i−1)/n⌋`.
    pub lowest_surviving: Option<SurvivingTerm>,
    /// Whether the order `K + 1` layer is zero as well.
    pub next_order_zero: bool,
    /// Largest coefficient magnitude inside the frontier (0 in rational mode).
    pub max_inside: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SurvivingTerm {
    pub i: u32,
    pub j: u32,
    pub component: usize,
    pub magnitude: f64,
    pub within_log_bound: bool,
}

/// Recomputes the scaled residual of `T_K` from scratch (metric inverted by
/// elimination rather than through the recursion's route) and checks that every
/// slot with `i ≤ K` vanishes.
///
/// Fails hard with the offending slot printed when the frontier is broken.
pub fn residual_check<S: Scalar>(res: &ExpansionResult<S>) -> Result<ResidualReport, ExpansionError> {
    let k = res.spec.trunc_order;
    let n = res.spec.n as u32;
    let direct = q_operator_series(&res.u, k + 1)?.residual;
    let routes_agree = match S::MODE {
        ScalarMode::ExactRational => direct == res.residual,
        ScalarMode::Float64 => close(&direct, &res.residual),
    };
    let tol = match S::MODE {
        ScalarMode::ExactRational => 0.0,
        ScalarMode::Float64 => 1e-9 * scale_of(res),
    };
    let mut max_inside: f64 = 0.0;
    let mut lowest: Option<SurvivingTerm> = None;
    let mut next_zero = true;
    for (s, comp) in direct.components().iter().enumerate() {
        for ((i, j), c) in comp.terms() {
            let mag = c.max_abs();
            if i <= k {
                max_inside = max_inside.max(mag);
                if mag > tol {
                    return Err(ExpansionError::Frontier { i, j, s, jet: format!("{:?}", c) });
                }
                continue;
            }
            if i == k + 1 && mag > tol {
                next_zero = false;
            }
            let better = match &lowest {
                None => true,
                Some(l) => (i, j) < (l.i, l.j),
            };
            if better && mag > tol {
                lowest = Some(SurvivingTerm {
                    i,
                    j,
                    component: s,
                    magnitude: mag,
                    within_log_bound: j <= (i - 1) / n,
                });
            }
        }
    }
    Ok(ResidualReport {
        trunc_order: k,
        frontier_clean: true,
        routes_agree,
        lowest_surviving: lowest,
        next_order_zero: next_zero,
        max_inside,
    })
}

fn scale_of<S: Scalar>(res: &ExpansionResult<S>) -> f64 {
    res.coeffs
        .values()
        .flat_map(|v| v.iter().map(|c| c.max_abs()))
        .chain(res.spec.phi.iter().map(|c| c.max_abs()))
        .fold(1.0, f64::max)
}

fn close<S: Scalar>(a: &crate::series::VectorLogSeries<S>, b: &crate::series::VectorLogSeries<S>) -> bool {
    let mut worst: f64 = 0.0;
    for (ca, cb) in a.components().iter().zip(b.components()) {
        match ca.sub(cb) {
            Ok(d) => {
                for (_, c) in d.terms() {
                    worst = worst.max(c.max_abs());
                }
            }
            Err(_) => return false,
        }
    }
    worst <= 1e-9
}
