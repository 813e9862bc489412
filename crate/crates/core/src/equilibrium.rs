//! Pure-strategy equilibria for arbitrary valuation profiles.
//!
//! The solver runs damped best-response iteration `b <- (1-λ) b + λ BR(b)`
//! starting from the sorted lower bounds. Best responses map the bound box into
//! itself and the box is convex, so every iterate stays inside it. Existence of
//! a fixed point is guaranteed; uniqueness is only known for the
//! one-larger-others-symmetric case (see [`crate::olos`]), and elsewhere the
//! solver reports whichever equilibrium it reaches.

use rayon::prelude::*;
use serde::Serialize;

use crate::auction::{allocate, check_len, response_utility_ln, BidProfile, ValuationProfile, WeightExponent};
use crate::error::{Error, Result};
use crate::response::{
    best_response_ln, best_response_profile, ln_competitor_weights, lower_bounds_sorted,
    BidLowerBounds,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Sup-norm tolerance on `BR(b) - b`.
    pub tol: f64,
    pub max_iter: usize,
    /// Weight `λ` of the best response in each update.
    pub damping: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 10_000, damping: 0.5 }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub bids: BidProfile,
    pub revenue: f64,
    pub iterations: usize,
    /// `max_i |BR_i(b) - b_i|` at the returned bids.
    pub residual: f64,
    pub bounds_used: BidLowerBounds,
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Damped best-response iteration to a fixed point of `BR`.
///
/// On [`Error::ConvergenceFailure`] the best iterate seen is carried in the
/// error.
pub fn solve_fixed_point(
    values: &ValuationProfile,
    p: WeightExponent,
    opts: SolveOptions,
) -> Result<EquilibriumResult> {
    opts.validate()?;
    let bounds = lower_bounds_sorted(values, p);
    let mut bids = BidProfile::new(bounds.w.clone())?;
    let mut best: (f64, Vec<f64>) = (f64::INFINITY, bids.as_slice().to_vec());
    let lambda = opts.damping;

    for iteration in 0..opts.max_iter {
        let br = best_response_profile(&bids, values, p)?;
        if !bounds.contains(br.as_slice(), values) {
            return Err(Error::Domain(format!(
                "best response {:?} left the bound box at iteration {iteration}",
                br.as_slice()
            )));
        }
        let residual = sup_distance(br.as_slice(), bids.as_slice());
        if residual < best.0 {
            best = (residual, bids.as_slice().to_vec());
        }
        if residual <= opts.tol {
            let revenue = revenue(&bids, p)?;
            return Ok(EquilibriumResult {
                bids,
                revenue,
                iterations: iteration,
                residual,
                bounds_used: bounds,
            });
        }
        let next: Vec<f64> = bids
            .as_slice()
            .iter()
            .zip(br.as_slice())
            .map(|(&b, &r)| (1.0 - lambda) * b + lambda * r)
            .collect();
        bids = BidProfile::new(next)?;
    }
    Err(Error::ConvergenceFailure {
        what: "best-response iteration",
        iterations: opts.max_iter,
        residual: best.0,
        best: Some(best.1),
    })
}

/// Seller revenue `Σ a_i(b) b_i`.
pub fn revenue(bids: &BidProfile, p: WeightExponent) -> Result<f64> {
    let a = allocate(bids, p)?;
    Ok(a.as_slice().iter().zip(bids.as_slice()).map(|(a, b)| a * b).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashReport {
    pub is_epsilon_nash: bool,
    pub epsilon: f64,
    pub worst_deviator: usize,
    pub worst_gain: f64,
    /// Largest unilateral gain found for each bidder.
    pub gains: Vec<f64>,
}

pub const DEFAULT_GRID_POINTS: usize = 100_000;
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Brute-force equilibrium check.
///
/// For each bidder, scans `grid_points` evenly spaced deviations on `[0, v_i]`
/// plus the analytic best response and records the largest utility gain over
/// the bidder's current utility.
pub fn verify_nash(
    bids: &BidProfile,
    values: &ValuationProfile,
    p: WeightExponent,
    grid_points: usize,
    epsilon: f64,
) -> Result<NashReport> {
    check_len("bids", bids.len(), values.len())?;
    if grid_points < 1000 {
        return Err(Error::InvalidArgument(format!(
            "grid_points must be at least 1000, got {grid_points}"
        )));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be non-negative, got {epsilon}")));
    }
    let b = bids.as_slice();
    let v = values.as_slice();
    let ln_s = ln_competitor_weights(b, p);

    let gains: Vec<f64> = (0..b.len())
        .into_par_iter()
        .map(|i| {
            let utility = |x: f64| {
                if ln_s[i] == f64::NEG_INFINITY {
                    // nobody else bids: any positive bid wins the whole item
                    if x > 0.0 {
                        v[i] - x
                    } else {
                        0.0
                    }
                } else {
                    response_utility_ln(x, ln_s[i], v[i], p)
                }
            };
            let current = utility(b[i]);
            let step = v[i] / (grid_points - 1) as f64;
            let mut best = (0..grid_points)
                .map(|k| utility(step * k as f64))
                .fold(f64::NEG_INFINITY, f64::max);
            if ln_s[i].is_finite() {
                if let Ok(br) = best_response_ln(ln_s[i], v[i], p) {
                    best = best.max(utility(br));
                }
            }
            best - current
        })
        .collect();

    let (worst_deviator, worst_gain) = gains
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, g)| if g > acc.1 { (i, g) } else { acc });
    Ok(NashReport {
        is_epsilon_nash: worst_gain <= epsilon,
        epsilon,
        worst_deviator,
        worst_gain,
        gains,
    })
}
