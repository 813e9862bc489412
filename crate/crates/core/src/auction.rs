//! Weight functions, allocations and bidder utilities for the quasi-proportional
//! auction with weight function `f(x) = x^p`.
//!
//! Every bidder receives the share `f(b_i) / Σ_j f(b_j)` and pays `b_i` per unit
//! of allocation, so its utility is `a_i(b) (v_i - b_i)`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Exponent `p > 0` of the weight function `f(x) = x^p`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct WeightExponent(f64);

impl WeightExponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 0.0 {
            Ok(Self(p))
        } else {
            Err(Error::InvalidExponent(p))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `x^p`, with `0^p = 0`.
    #[inline]
    pub fn weight(self, x: f64) -> f64 {
        weight(self, x)
    }
}

/// `x^p` for `x >= 0`; zero bids have zero weight.
#[inline]
pub fn weight(p: WeightExponent, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x.powf(p.0)
    }
}

/// Private values of the bidders. At least two bidders, all values positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ValuationProfile(Vec<f64>);

impl ValuationProfile {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidValuations(format!(
                "need at least 2 bidders, got {}",
                values.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::InvalidValuations(format!(
                "value {i} must be finite and positive, got {v}"
            )));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Non-negative bids, one per bidder.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct BidProfile(Vec<f64>);

impl BidProfile {
    pub fn new(bids: Vec<f64>) -> Result<Self> {
        if bids.is_empty() {
            return Err(Error::InvalidBids("empty bid profile".into()));
        }
        if let Some((i, b)) = bids
            .iter()
            .enumerate()
            .find(|(_, b)| !(b.is_finite() && **b >= 0.0))
        {
            return Err(Error::InvalidBids(format!(
                "bid {i} must be finite and non-negative, got {b}"
            )));
        }
        Ok(Self(bids))
    }

    /// Like [`BidProfile::new`], additionally requiring `b_i <= v_i`.
    pub fn within(bids: Vec<f64>, values: &ValuationProfile) -> Result<Self> {
        let bids = Self::new(bids)?;
        check_len("bids", bids.len(), values.len())?;
        if let Some(i) = (0..bids.len()).find(|&i| bids.0[i] > values.0[i]) {
            return Err(Error::InvalidBids(format!(
                "bid {i} ({}) exceeds the bidder's value ({})",
                bids.0[i], values.0[i]
            )));
        }
        Ok(bids)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Allocation shares, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct AllocationProfile(Vec<f64>);

impl AllocationProfile {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

pub(crate) fn check_len(what: &'static str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::LengthMismatch { what, got, expected })
    }
}

/// `a_i = b_i^p / Σ_j b_j^p`.
///
/// Weights are normalized by the largest bid before exponentiation, so large
/// exponents do not overflow.
pub fn allocate(bids: &BidProfile, p: WeightExponent) -> Result<AllocationProfile> {
    let b_max = bids.0.iter().copied().fold(0.0_f64, f64::max);
    if b_max <= 0.0 {
        return Err(Error::AllZeroBids);
    }
    let mut shares: Vec<f64> = bids.0.iter().map(|&b| weight(p, b / b_max)).collect();
    let total: f64 = shares.iter().sum();
    for a in &mut shares {
        *a /= total;
    }
    Ok(AllocationProfile(shares))
}

/// Utility of bidder `i`: `a_i(b) (v_i - b_i)`.
///
/// Overbids (`b_i > v_i`) give negative utility rather than an error.
pub fn utility(
    bids: &BidProfile,
    values: &ValuationProfile,
    p: WeightExponent,
    i: usize,
) -> Result<f64> {
    check_len("bids", bids.len(), values.len())?;
    if i >= bids.len() {
        return Err(Error::InvalidArgument(format!(
            "bidder index {i} out of range for {} bidders",
            bids.len()
        )));
    }
    let a = allocate(bids, p)?;
    Ok(a.0[i] * (values.0[i] - bids.0[i]))
}

/// `ln Σ exp(x_k)`, returning `-inf` for an empty or all `-inf` input.
pub(crate) fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln f(b) = p ln b` (`-inf` at zero).
#[inline]
pub(crate) fn ln_weight(p: WeightExponent, b: f64) -> f64 {
    if b <= 0.0 {
        f64::NEG_INFINITY
    } else {
        p.0 * b.ln()
    }
}

/// Response curve of one bidder, `u(b) = b^p / (b^p + s) (v - b)`, where `s` is
/// the summed weight of all other bids, given as `ln s`.
#[inline]
pub fn response_utility_ln(b: f64, ln_s: f64, v: f64, p: WeightExponent) -> f64 {
    if b <= 0.0 {
        return 0.0;
    }
    // a = 1 / (1 + s b^{-p})
    let a = 1.0 / (1.0 + (ln_s - ln_weight(p, b)).exp());
    a * (v - b)
}

/// [`response_utility_ln`] with `s` given directly.
#[inline]
pub fn response_utility(b: f64, s: f64, v: f64, p: WeightExponent) -> f64 {
    response_utility_ln(b, s.ln(), v, p)
}

/// Value and first two derivatives, in `b`, of a bidder's response curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UtilityDerivatives {
    pub u: f64,
    pub du: f64,
    pub d2u: f64,
}

/// Analytic `u`, `u'` and `u''` of `u(b) = f/(f+s) (v - b)` at a bid `b > 0`.
pub fn utility_derivatives(
    b: f64,
    s: f64,
    v: f64,
    p: WeightExponent,
) -> Result<UtilityDerivatives> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::Domain(format!("bid must be positive, got {b}")));
    }
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::Domain(format!(
            "competitor weight sum must be positive, got {s}"
        )));
    }
    let pe = p.0;
    let f = weight(p, b);
    let f1 = pe * f / b;
    let f2 = pe * (pe - 1.0) * f / (b * b);
    let fs = f + s;
    let a = f / fs;
    let a1 = f1 * s / (fs * fs);
    let a2 = s * (f2 * fs - 2.0 * f1 * f1) / (fs * fs * fs);
    Ok(UtilityDerivatives {
        u: a * (v - b),
        du: a1 * (v - b) - a,
        d2u: a2 * (v - b) - 2.0 * a1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p(x: f64) -> WeightExponent {
        WeightExponent::new(x).unwrap()
    }

    fn bids(b: &[f64]) -> BidProfile {
        BidProfile::new(b.to_vec()).unwrap()
    }

    #[test]
    fn exponent_must_be_positive() {
        assert!(WeightExponent::new(0.0).is_err());
        assert!(WeightExponent::new(-1.0).is_err());
        assert!(WeightExponent::new(f64::NAN).is_err());
        assert!(WeightExponent::new(f64::INFINITY).is_err());
        assert!(WeightExponent::new(1e-9).is_ok());
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight(p(1.0), 3.0), 3.0);
        assert_eq!(weight(p(2.0), 0.0), 0.0);
        assert_relative_eq!(weight(p(0.5), 4.0), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn valuation_profile_validation() {
        assert!(ValuationProfile::new(vec![1.0]).is_err());
        assert!(ValuationProfile::new(vec![1.0, 0.0]).is_err());
        assert!(ValuationProfile::new(vec![1.0, -2.0]).is_err());
        assert!(ValuationProfile::new(vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn bids_bounded_by_values() {
        let v = ValuationProfile::new(vec![1.0, 2.0]).unwrap();
        assert!(BidProfile::within(vec![0.5, 2.0], &v).is_ok());
        assert!(BidProfile::within(vec![1.5, 1.0], &v).is_err());
        assert!(BidProfile::new(vec![-0.1, 1.0]).is_err());
    }

    #[test]
    fn allocate_examples() {
        let a = allocate(&bids(&[1.0, 1.0]), p(2.0)).unwrap();
        assert_eq!(a.as_slice(), &[0.5, 0.5]);
        let a = allocate(&bids(&[2.0, 1.0, 1.0]), p(1.0)).unwrap();
        assert_eq!(a.as_slice(), &[0.5, 0.25, 0.25]);
        let a = allocate(&bids(&[0.0, 1.0]), p(1.0)).unwrap();
        assert_eq!(a.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn allocate_all_zero_is_an_error() {
        assert_eq!(allocate(&bids(&[0.0, 0.0]), p(1.0)), Err(Error::AllZeroBids));
    }

    #[test]
    fn allocate_large_exponent_does_not_overflow() {
        let a = allocate(&bids(&[10.0, 9.0]), p(1000.0)).unwrap();
        assert!(a.as_slice().iter().all(|x| x.is_finite()));
        assert_relative_eq!(a.as_slice()[0], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn utility_examples() {
        let v = ValuationProfile::new(vec![10.0, 3.0]).unwrap();
        let u = utility(&bids(&[5.0, 7.0]), &v, p(1.0), 0).unwrap();
        assert_relative_eq!(u, 5.0 / 12.0 * 5.0, max_relative = 1e-14);

        let u = utility(&bids(&[10.0, 4.2]), &v, p(3.0), 0).unwrap();
        assert_eq!(u, 0.0);

        let v = ValuationProfile::new(vec![10.0, 1.0]).unwrap();
        assert_eq!(utility(&bids(&[0.0, 1.0]), &v, p(1.0), 0).unwrap(), 0.0);
    }

    #[test]
    fn utility_overbid_is_negative() {
        let v = ValuationProfile::new(vec![1.0, 1.0]).unwrap();
        assert!(utility(&bids(&[2.0, 1.0]), &v, p(1.0), 0).unwrap() < 0.0);
    }

    #[test]
    fn utility_errors() {
        let v = ValuationProfile::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(
            utility(&bids(&[0.0, 0.0]), &v, p(1.0), 0),
            Err(Error::AllZeroBids)
        );
        assert!(matches!(
            utility(&bids(&[1.0, 1.0, 1.0]), &v, p(1.0), 0),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(utility(&bids(&[1.0, 1.0]), &v, p(1.0), 2).is_err());
    }

    #[test]
    fn derivative_stationary_point_p1() {
        // b^2 + 14 b - 70 = 0
        let b = (-14.0 + 476.0_f64.sqrt()) / 2.0;
        let d = utility_derivatives(b, 7.0, 10.0, p(1.0)).unwrap();
        assert!(d.du.abs() < 1e-12, "u' = {}", d.du);
        assert!(d.d2u < 0.0);
        let h = 1e-6 * b;
        let fd = (response_utility(b + h, 7.0, 10.0, p(1.0))
            - response_utility(b - h, 7.0, 10.0, p(1.0)))
            / (2.0 * h);
        assert!(fd.abs() < 1e-8, "finite difference {fd}");
    }

    #[test]
    fn derivative_at_value() {
        for pe in [0.5, 1.0, 2.0, 4.0] {
            let d = utility_derivatives(10.0, 7.0, 10.0, p(pe)).unwrap();
            assert_eq!(d.u, 0.0);
            assert!(d.du < 0.0);
        }
    }

    #[test]
    fn derivative_domain_errors() {
        assert!(utility_derivatives(0.0, 1.0, 1.0, p(1.0)).is_err());
        assert!(utility_derivatives(0.5, 0.0, 1.0, p(1.0)).is_err());
    }

    #[test]
    fn log_sum_exp_basic() {
        let xs = [1.0_f64.ln(), 2.0_f64.ln(), 3.0_f64.ln()];
        assert_relative_eq!(log_sum_exp(xs.iter().copied()), 6.0_f64.ln(), max_relative = 1e-15);
        assert_eq!(log_sum_exp(std::iter::empty()), f64::NEG_INFINITY);
    }

    fn profile() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0..100.0_f64, 2..12)
            .prop_filter("needs a positive bid", |b| b.iter().any(|&x| x > 0.0))
    }

    proptest! {
        #[test]
        fn allocation_sums_to_one(b in profile(), pe in 0.05..20.0_f64) {
            let a = allocate(&bids(&b), p(pe)).unwrap();
            let total: f64 = a.as_slice().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            for (ai, bi) in a.as_slice().iter().zip(&b) {
                prop_assert!((0.0..=1.0).contains(ai));
                if *bi == 0.0 {
                    prop_assert_eq!(*ai, 0.0);
                }
            }
        }

        #[test]
        fn allocation_is_scale_covariant(b in profile(), pe in 0.05..20.0_f64, c in 1e-3..1e3_f64) {
            let a = allocate(&bids(&b), p(pe)).unwrap();
            let scaled: Vec<f64> = b.iter().map(|x| c * x).collect();
            let ac = allocate(&bids(&scaled), p(pe)).unwrap();
            for (x, y) in a.as_slice().iter().zip(ac.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn allocation_is_monotone(b in profile(), pe in 0.05..10.0_f64, bump in 0.01..10.0_f64) {
            let i = 0;
            prop_assume!(b.iter().skip(1).any(|&x| x > 0.0));
            let a = allocate(&bids(&b), p(pe)).unwrap().as_slice()[i];
            let mut raised = b.clone();
            raised[i] += bump;
            let a2 = allocate(&bids(&raised), p(pe)).unwrap().as_slice()[i];
            prop_assert!(a2 > a || (a == 1.0 && a2 == 1.0));
        }

        #[test]
        fn derivatives_match_finite_differences(
            b in 0.05..50.0_f64,
            s in 0.01..100.0_f64,
            v in 0.1..100.0_f64,
            pe in 0.1..10.0_f64,
        ) {
            let pw = p(pe);
            let d = utility_derivatives(b, s, v, pw).unwrap();
            let h = 1e-6 * b;
            let u = |x: f64| weight(pw, x) / (weight(pw, x) + s) * (v - x);
            let fd1 = (u(b + h) - u(b - h)) / (2.0 * h);
            let scale1 = d.du.abs().max(u(b).abs() / b).max(1e-6);
            prop_assert!((fd1 - d.du).abs() <= 1e-4 * scale1, "u' {} vs {}", d.du, fd1);
            // second difference with a larger step
            let h2 = 1e-4 * b;
            let fd2 = (u(b + h2) - 2.0 * u(b) + u(b - h2)) / (h2 * h2);
            let scale2 = d.d2u.abs().max(u(b).abs() / (b * b)).max(d.du.abs() / b).max(1e-6);
            prop_assert!((fd2 - d.d2u).abs() <= 1e-3 * scale2, "u'' {} vs {}", d.d2u, fd2);
        }

        #[test]
        fn weight_ratio_condition(b in 1e-3..1e3_f64, pe in 1e-3..40.0_f64) {
            // f f'' < 2 (f')^2 for f = b^p, written out as p(p-1) < 2p^2 after dividing by b^{2p-2}
            let f = weight(p(pe), b);
            let f1 = pe * f / b;
            let f2 = pe * (pe - 1.0) * f / (b * b);
            prop_assert!(f * f2 < 2.0 * f1 * f1);
        }

        #[test]
        fn allocation_curvature_condition(b in 0.01..100.0_f64, s in 0.01..100.0_f64, pe in 0.05..10.0_f64) {
            // a a'' < 2 (a')^2 for a = f / (f + s)
            let f = weight(p(pe), b);
            let f1 = pe * f / b;
            let f2 = pe * (pe - 1.0) * f / (b * b);
            let fs = f + s;
            let a = f / fs;
            let a1 = f1 * s / (fs * fs);
            let a2 = s * (f2 * fs - 2.0 * f1 * f1) / (fs * fs * fs);
            prop_assert!(a * a2 < 2.0 * a1 * a1);
        }
    }
}
