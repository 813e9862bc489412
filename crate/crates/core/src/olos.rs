//! Exact equilibrium for one large bidder (value `alpha > 1`) against `n - 1`
//! symmetric small bidders (value 1).
//!
//! At equilibrium all small bidders bid the same `b2`, and the bid ratio
//! `z = b1 / b2` is the unique positive root of
//!
//! ```text
//! h(z) = z^{2p+1} + c1 z^{p+1} - c2 z^p + c3 z - c4
//! c1 = (n-2) + (1+p)(n-1)      c2 = alpha (1+p)(n-1)
//! c3 = (n-1)(n-2)(1+p)         c4 = alpha (n-1) [(1+p)(n-2) + 1]
//! ```
//!
//! which lies strictly inside `(alpha^{1/(2p+1)}, alpha)`, where `h` changes
//! sign from negative to positive. The bids and revenue follow in closed form
//! from `z`.

use serde::Serialize;

use crate::auction::{BidProfile, ValuationProfile, WeightExponent};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OlosInstance {
    pub n: usize,
    pub alpha: f64,
    pub p: WeightExponent,
}

impl OlosInstance {
    pub fn new(n: usize, alpha: f64, p: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("n must be at least 2, got {n}")));
        }
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be finite and greater than 1, got {alpha}"
            )));
        }
        Ok(Self { n, alpha, p: WeightExponent::new(p)? })
    }

    pub fn valuations(&self) -> ValuationProfile {
        let mut v = vec![1.0; self.n];
        v[0] = self.alpha;
        ValuationProfile::new(v).expect("n >= 2 and alpha > 1")
    }

    /// `(alpha^{1/(2p+1)}, alpha)`.
    pub fn root_interval(&self) -> (f64, f64) {
        let pe = self.p.get();
        (self.alpha.powf(1.0 / (2.0 * pe + 1.0)), self.alpha)
    }

    fn coefficients(&self) -> Coefficients {
        let n = self.n as f64;
        let pe = self.p.get();
        let a = self.alpha;
        Coefficients {
            c1: (n - 2.0) + (1.0 + pe) * (n - 1.0),
            c2: a * (1.0 + pe) * (n - 1.0),
            c3: (n - 1.0) * (n - 2.0) * (1.0 + pe),
            c4: a * (n - 1.0) * ((1.0 + pe) * (n - 2.0) + 1.0),
        }
    }

    fn with_context(&self, e: Error) -> Error {
        Error::Instance { alpha: self.alpha, n: self.n, p: self.p.get(), source: Box::new(e) }
    }
}

#[derive(Debug, Clone, Copy)]
struct Coefficients {
    c1: f64,
    c2: f64,
    c3: f64,
    c4: f64,
}

impl Coefficients {
    /// `h(z) / z^p` and its derivative. Same sign as `h`, without the
    /// `z^{2p+1}` overflow for large exponents.
    fn scaled(&self, z: f64, p: f64) -> (f64, f64) {
        let zp = z.powf(p);
        let zmp = 1.0 / zp;
        let value = z * zp + self.c1 * z - self.c2 + self.c3 * z * zmp - self.c4 * zmp;
        let slope = (p + 1.0) * zp + self.c1 + (1.0 - p) * self.c3 * zmp + p * self.c4 * zmp / z;
        (value, slope)
    }
}

/// `h(z)` evaluated as written.
pub fn h_eval(z: f64, inst: &OlosInstance) -> f64 {
    let Coefficients { c1, c2, c3, c4 } = inst.coefficients();
    let pe = inst.p.get();
    z.powf(2.0 * pe + 1.0) + c1 * z.powf(pe + 1.0) - c2 * z.powf(pe) + c3 * z - c4
}

/// `h'(z) = (2p+1) z^{2p} + (p+1) c1 z^p - p c2 z^{p-1} + c3`.
pub fn h_prime(z: f64, inst: &OlosInstance) -> f64 {
    let Coefficients { c1, c2, c3, .. } = inst.coefficients();
    let pe = inst.p.get();
    (2.0 * pe + 1.0) * z.powf(2.0 * pe) + (pe + 1.0) * c1 * z.powf(pe)
        - pe * c2 * z.powf(pe - 1.0)
        + c3
}

const BISECTION_STEPS: usize = 80;
const NEWTON_STEPS: usize = 5;

/// Default relative bracket width for [`solve_z`].
pub const DEFAULT_Z_TOL: f64 = 1e-15;

/// Unique root of `h` in `(alpha^{1/(2p+1)}, alpha)`.
///
/// Bisection on the sign-verified bracket until its relative width drops below
/// `tol` (at most 80 halvings), then up to five Newton steps kept inside the
/// bracket.
pub fn solve_z(inst: &OlosInstance, tol: f64) -> Result<f64> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let pe = inst.p.get();
    let coef = inst.coefficients();
    let (left, right) = inst.root_interval();
    let offset = 1e-12 * inst.alpha;
    let mut lo = (left + offset).min(0.5 * (left + right));
    let mut hi = (right - offset).max(0.5 * (left + right));
    let (h_lo, _) = coef.scaled(lo, pe);
    let (h_hi, _) = coef.scaled(hi, pe);
    if !(h_lo < 0.0 && h_hi > 0.0) {
        return Err(Error::BracketFailure { lo, hi, h_lo, h_hi });
    }

    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * hi || mid <= lo || mid >= hi {
            break;
        }
        let (h_mid, _) = coef.scaled(mid, pe);
        if h_mid == 0.0 {
            return Ok(mid);
        }
        if h_mid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut z = 0.5 * (lo + hi);
    for _ in 0..NEWTON_STEPS {
        let (h, dh) = coef.scaled(z, pe);
        if h == 0.0 || !(dh.is_finite() && dh > 0.0) {
            break;
        }
        let next = z - h / dh;
        if !(next >= lo && next <= hi) || next == z {
            break;
        }
        z = next;
    }
    Ok(z)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlosEquilibrium {
    pub instance: OlosInstance,
    /// `b1 / b2`.
    pub z: f64,
    pub b1: f64,
    pub b2: f64,
    /// `z^{p+1} (z^p + n - 2) / (n - 1)`.
    pub w_aux: f64,
    /// Closed-form equilibrium revenue.
    pub revenue: f64,
    /// Relative residuals of the large and small bidders' first-order conditions.
    pub foc_residuals: [f64; 2],
}

impl OlosEquilibrium {
    /// `(b1, b2, ..., b2)`.
    pub fn bid_profile(&self) -> BidProfile {
        let mut b = vec![self.b2; self.instance.n];
        b[0] = self.b1;
        BidProfile::new(b).expect("equilibrium bids are positive")
    }

    /// Revenue recomputed from the bids: `(z^{p+1} + n - 1) / (z^p + n - 1) b2`.
    pub fn revenue_from_bids(&self) -> f64 {
        let pe = self.instance.p.get();
        let m = (self.instance.n - 1) as f64;
        let zp = self.z.powf(pe);
        (self.z * zp + m) / (zp + m) * self.b2
    }
}

fn relative_residual(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    (lhs - rhs).abs() / scale
}

/// Equilibrium bids and revenue.
pub fn olos_equilibrium(inst: &OlosInstance) -> Result<OlosEquilibrium> {
    let z = solve_z(inst, DEFAULT_Z_TOL).map_err(|e| inst.with_context(e))?;
    let pe = inst.p.get();
    let m = (inst.n - 1) as f64;
    let alpha = inst.alpha;
    let zp = z.powf(pe);
    let w_aux = z * zp * (zp + m - 1.0) / m;
    let b2 = pe / (1.0 + pe) * (alpha - w_aux) / (z - w_aux);
    let b1 = z * b2;
    let revenue = eta_unchecked(z, inst);

    let b1p = b1.powf(pe);
    let b2p = b2.powf(pe);
    let foc_large = relative_residual(m * b2p * (alpha * pe - (1.0 + pe) * b1), b1 * b1p);
    let foc_small = relative_residual((b1p + (m - 1.0) * b2p) * (pe - (1.0 + pe) * b2), b2 * b2p);

    Ok(OlosEquilibrium {
        instance: *inst,
        z,
        b1,
        b2,
        w_aux,
        revenue,
        foc_residuals: [foc_large, foc_small],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RevenueBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Revenue bounds from evaluating `eta` at the ends of the root interval.
///
/// `upper = (p/(1+p)) [1 + alpha^p (alpha-1) / (alpha^p + n - 1)]`.
pub fn revenue_bounds(inst: &OlosInstance) -> RevenueBounds {
    let pe = inst.p.get();
    let m = (inst.n - 1) as f64;
    let alpha = inst.alpha;
    // alpha^p / (alpha^p + n - 1) = 1 / (1 + (n-1) alpha^{-p})
    let upper = pe / (1.0 + pe) * (1.0 + (alpha - 1.0) / (1.0 + m * alpha.powf(-pe)));
    let lower = eta_unchecked(inst.root_interval().0, inst);
    RevenueBounds { lower, upper }
}

/// Revenue as a function of the bid ratio:
///
/// ```text
/// eta(x) = (p/(1+p)) [1 + x^p (x-1) / (x^p + n-1)]
///                    [1 - (alpha-x)(n-1) / (x^{2p+1} + (n-2) x^{p+1} - x(n-1))]
/// ```
///
/// Defined on the closed root interval `[alpha^{1/(2p+1)}, alpha]`, where it is
/// strictly increasing; `eta(z)` is the equilibrium revenue.
pub fn eta(x: f64, inst: &OlosInstance) -> Result<f64> {
    let (lo, hi) = inst.root_interval();
    let slack = 4.0 * f64::EPSILON * hi;
    if !(x >= lo - slack && x <= hi + slack) {
        return Err(Error::Domain(format!(
            "eta is defined on [{lo}, {hi}], got x = {x}"
        )));
    }
    Ok(eta_unchecked(x, inst))
}

fn eta_unchecked(x: f64, inst: &OlosInstance) -> f64 {
    let pe = inst.p.get();
    let m = (inst.n - 1) as f64;
    let xp = x.powf(pe);
    let xmp = 1.0 / xp;
    let first = 1.0 + (x - 1.0) / (1.0 + m * xmp);
    // x^{2p+1} + (n-2) x^{p+1} - x(n-1) = x^{p+1} [x^p + (n-2) - (n-1) x^{-p}]
    let denom = x * xp * (xp + (m - 1.0) - m * xmp);
    let second = 1.0 - (inst.alpha - x) * m / denom;
    pe / (1.0 + pe) * first * second
}
