//! Grids and one-dimensional maximization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Grid {
    pub fn linear(min: f64, max: f64, points: usize) -> Self {
        Self { min, max, points, spacing: Spacing::Linear }
    }

    pub fn log(min: f64, max: f64, points: usize) -> Self {
        Self { min, max, points, spacing: Spacing::Log }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::InvalidArgument("grid bounds must be finite".into()));
        }
        if self.points < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 points, got {}",
                self.points
            )));
        }
        if !(self.max > self.min) {
            return Err(Error::InvalidArgument(format!(
                "grid max ({}) must exceed min ({})",
                self.max, self.min
            )));
        }
        if self.spacing == Spacing::Log && !(self.min > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "log grid needs a positive min, got {}",
                self.min
            )));
        }
        Ok(())
    }

    /// Grid values in increasing order; the endpoints are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        let last = self.points - 1;
        (0..self.points)
            .map(|k| {
                if k == 0 {
                    return self.min;
                }
                if k == last {
                    return self.max;
                }
                let t = k as f64 / last as f64;
                match self.spacing {
                    Spacing::Linear => self.min + t * (self.max - self.min),
                    Spacing::Log => (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`. Returns the best point
/// evaluated; every evaluation is appended to `trace`.
pub fn golden_section_max<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    trace: &mut Vec<(f64, f64)>,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(tol > 0.0) || !(hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "golden section needs lo < hi and tol > 0 (lo={lo}, hi={hi}, tol={tol})"
        )));
    }
    let mut eval = |x: f64, trace: &mut Vec<(f64, f64)>| -> Result<f64> {
        let y = f(x)?;
        trace.push((x, y));
        Ok(y)
    };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = eval(x1, trace)?;
    let mut f2 = eval(x2, trace)?;
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = eval(x2, trace)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = eval(x1, trace)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Index of the largest value; ties resolve to the first occurrence.
pub fn argmax(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
}
