//! Best responses and bid lower bounds.
//!
//! For a bidder facing competitor weight `s`, the sign of `u'(b)` equals the
//! sign of `p s (v - b) - b (b^p + s)`, which is strictly decreasing on
//! `[0, v]`. The best response is therefore its unique root, located here by a
//! safeguarded Newton iteration on a bracket that always contains it.
//!
//! A vector `w` with `w_i <= v_i / (1 + (1/p)(1 + f(w_i)/s_i))`,
//! `s_i = Σ_{j≠i} f(w_j)`, guarantees that best responses map the box
//! `[w_1, v_1] x ... x [w_n, v_n]` into itself. Two such constructions are
//! provided, one uniform in the minimum value and one built from the sorted
//! values. The minimum of `w` also bounds equilibrium revenue from below, since
//! allocations sum to one; that floor is a consequence of the construction, not
//! a separately proved result.

use serde::Serialize;

use crate::auction::{
    check_len, ln_weight, log_sum_exp, BidProfile, ValuationProfile, WeightExponent,
};
use crate::error::{Error, Result};

const MAX_ITER: usize = 400;

/// Absolute tolerance of the box condition.
pub const BOX_TOLERANCE: f64 = 1e-12;

/// Best response to competitor weight `s = Σ_{j≠i} b_j^p` for a bidder with value `v`.
pub fn best_response(s: f64, v: f64, p: WeightExponent) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::Domain(format!(
            "competitor weight sum must be positive, got {s}"
        )));
    }
    best_response_ln(s.ln(), v, p)
}

/// [`best_response`] with the competitor weight given as `ln s`.
pub fn best_response_ln(ln_s: f64, v: f64, p: WeightExponent) -> Result<f64> {
    if !ln_s.is_finite() {
        return Err(Error::Domain(format!(
            "competitor weight sum must be positive and finite, got ln s = {ln_s}"
        )));
    }
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Domain(format!("value must be positive, got {v}")));
    }
    let pe = p.get();
    // g(b) = b^{p+1}/s + (1+p) b - p v, increasing and convex in b; root in (0, v p/(1+p)).
    let g = |b: f64| -> (f64, f64) {
        let r = (ln_weight(p, b) - ln_s).exp();
        (b * r + (1.0 + pe) * b - pe * v, (1.0 + pe) * (r + 1.0))
    };

    let mut lo = 0.0_f64;
    let mut hi = v * pe / (1.0 + pe);
    let mut x = hi;
    let mut last_step = hi - lo;
    for _ in 0..MAX_ITER {
        let (gx, dg) = g(x);
        if gx == 0.0 {
            return Ok(x);
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - gx / dg;
        let next = if newton.is_finite()
            && newton > lo
            && newton < hi
            && (newton - x).abs() < 0.5 * last_step
        {
            newton
        } else {
            0.5 * (lo + hi)
        };
        last_step = (next - x).abs();
        if last_step <= 4.0 * f64::EPSILON * next.abs() || next == lo || next == hi {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::ConvergenceFailure {
        what: "best response",
        iterations: MAX_ITER,
        residual: hi - lo,
        best: Some(vec![x]),
    })
}

/// `ln s_i = ln Σ_{j≠i} b_j^p` for every bidder.
pub(crate) fn ln_competitor_weights(bids: &[f64], p: WeightExponent) -> Vec<f64> {
    let lw: Vec<f64> = bids.iter().map(|&b| ln_weight(p, b)).collect();
    (0..bids.len())
        .map(|i| {
            log_sum_exp(
                lw.iter()
                    .enumerate()
                    .filter(move |(j, _)| *j != i)
                    .map(|(_, x)| *x),
            )
        })
        .collect()
}

/// Component-wise best response to a bid profile.
pub fn best_response_profile(
    bids: &BidProfile,
    values: &ValuationProfile,
    p: WeightExponent,
) -> Result<BidProfile> {
    check_len("bids", bids.len(), values.len())?;
    let ln_s = ln_competitor_weights(bids.as_slice(), p);
    let mut out = Vec::with_capacity(bids.len());
    for (i, (&ls, &v)) in ln_s.iter().zip(values.as_slice()).enumerate() {
        if ls == f64::NEG_INFINITY {
            return Err(Error::Domain(format!(
                "bidder {i} faces no positive competing bid"
            )));
        }
        out.push(best_response_ln(ls, v, p)?);
    }
    BidProfile::new(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Uniform,
    Sorted,
    Custom,
}

/// Bid lower bounds `w` satisfying the box condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BidLowerBounds {
    pub w: Vec<f64>,
    pub kind: BoundKind,
}

impl BidLowerBounds {
    /// Validates caller-supplied bounds: `0 < w_i <= v_i` and the box condition.
    pub fn custom(w: Vec<f64>, values: &ValuationProfile, p: WeightExponent) -> Result<Self> {
        let check = check_box_condition(&w, values, p)?;
        if let Some(i) = (0..w.len()).find(|&i| w[i] > values.as_slice()[i]) {
            return Err(Error::InvalidArgument(format!(
                "bound {i} ({}) exceeds the bidder's value",
                w[i]
            )));
        }
        if !check.holds {
            let worst = check
                .slack
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap_or(0);
            return Err(Error::InvalidArgument(format!(
                "bounds violate the box condition at bidder {worst} (slack {:e})",
                check.slack[worst]
            )));
        }
        Ok(Self { w, kind: BoundKind::Custom })
    }

    /// `min_i w_i`, a floor on revenue at any equilibrium inside the box.
    pub fn revenue_floor(&self) -> f64 {
        self.w.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, bids: &[f64], values: &ValuationProfile) -> bool {
        bids.len() == self.w.len()
            && bids
                .iter()
                .zip(&self.w)
                .zip(values.as_slice())
                .all(|((&b, &w), &v)| b >= w - BOX_TOLERANCE && b <= v + BOX_TOLERANCE)
    }
}

/// Same bound for every bidder: `v_min / (1 + (1/p)(1 + 1/(n-1)))`.
pub fn lower_bounds_uniform(values: &ValuationProfile, p: WeightExponent) -> BidLowerBounds {
    let n = values.len() as f64;
    let w = values.min() / (1.0 + (1.0 + 1.0 / (n - 1.0)) / p.get());
    BidLowerBounds { w: vec![w; values.len()], kind: BoundKind::Uniform }
}

/// Bounds built from the values sorted in decreasing order: the top two bidders
/// get `v_(2) / (1 + 2/p)`, the `i`-th (1-based, `i > 2`) gets
/// `min(v_(i) / (1 + (1/p)(1 + 1/(i-1))), w_(i-1))`. Ties keep input order.
pub fn lower_bounds_sorted(values: &ValuationProfile, p: WeightExponent) -> BidLowerBounds {
    let v = values.as_slice();
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]));

    let inv_p = 1.0 / p.get();
    let top = v[order[1]] / (1.0 + 2.0 * inv_p);
    let mut w = vec![0.0; v.len()];
    w[order[0]] = top;
    w[order[1]] = top;
    let mut prev = top;
    for (k, &idx) in order.iter().enumerate().skip(2) {
        let rank = k as f64; // i - 1 for the 1-based rank i = k + 1
        let bound = v[idx] / (1.0 + inv_p * (1.0 + 1.0 / rank));
        prev = bound.min(prev);
        w[idx] = prev;
    }
    BidLowerBounds { w, kind: BoundKind::Sorted }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxCheck {
    pub holds: bool,
    /// `rhs_i - w_i`; negative entries are violations.
    pub slack: Vec<f64>,
}

/// Checks `w_i <= v_i / (1 + (1/p)(1 + f(w_i)/s_i))` for every bidder.
pub fn check_box_condition(
    w: &[f64],
    values: &ValuationProfile,
    p: WeightExponent,
) -> Result<BoxCheck> {
    check_len("bounds", w.len(), values.len())?;
    if let Some(i) = w.iter().position(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "bound {i} must be positive, got {}",
            w[i]
        )));
    }
    let ln_s = ln_competitor_weights(w, p);
    let slack: Vec<f64> = w
        .iter()
        .zip(values.as_slice())
        .zip(&ln_s)
        .map(|((&wi, &vi), &ls)| {
            let ratio = (ln_weight(p, wi) - ls).exp();
            vi / (1.0 + (1.0 + ratio) / p.get()) - wi
        })
        .collect();
    let holds = slack.iter().all(|&s| s >= -BOX_TOLERANCE);
    Ok(BoxCheck { holds, slack })
}
