//! Choosing the weight exponent.
//!
//! For a one-larger-others-symmetric instance `(n, alpha)` the equilibrium
//! revenue `R(n, alpha, p)` is a cheap one-dimensional function of `p`.
//! [`optimize_p`] finds its maximizer by a coarse log-spaced scan followed by
//! golden-section refinement around the best cell; [`robust_p`] applies the same
//! scheme to the worst case over a finite set of instances. [`sweep`] and
//! [`star_curves`] tabulate these quantities along one parameter axis.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::olos::{olos_equilibrium, revenue_bounds, OlosInstance};
use crate::search::{argmax, golden_section_max, Grid};

/// `R(n, alpha, p)`.
pub fn equilibrium_revenue(n: usize, alpha: f64, p: f64) -> Result<f64> {
    let inst = OlosInstance::new(n, alpha, p)?;
    Ok(olos_equilibrium(&inst)?.revenue)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    pub p_min: f64,
    pub p_max: f64,
    /// Bracket width of the refinement, relative in `p`.
    pub tol: f64,
    pub coarse_points: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { p_min: 0.05, p_max: 50.0, tol: 1e-6, coarse_points: 64 }
    }
}

impl OptimizeOptions {
    fn grid(&self) -> Result<Grid> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.p_min > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "p_min must be positive, got {}",
                self.p_min
            )));
        }
        let g = Grid::log(self.p_min, self.p_max, self.coarse_points);
        g.validate()?;
        Ok(g)
    }
}

/// Which end of the search range the coarse scan peaked at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignResult {
    pub p_star: f64,
    pub r_star: f64,
    /// Set when the coarse scan is monotone towards an end of the range; the
    /// true maximizer then probably lies outside it.
    pub boundary: Option<Boundary>,
    /// Every `(p, R)` evaluated, coarse scan first.
    pub search_trace: Vec<(f64, f64)>,
}

/// Coarse scan of `objective` on `grid`, then golden-section refinement in
/// `ln p` over the two cells around the best grid point.
fn scan_and_refine<F>(
    objective: F,
    grid: &Grid,
    tol: f64,
) -> Result<(f64, f64, Option<Boundary>, Vec<(f64, f64)>)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let ps = grid.values();
    let rs: Vec<f64> = ps.par_iter().map(|&p| objective(p)).collect::<Result<_>>()?;
    let mut trace: Vec<(f64, f64)> = ps.iter().copied().zip(rs.iter().copied()).collect();
    let k = argmax(&rs).expect("grid has at least two points");
    let last = ps.len() - 1;
    let boundary = match k {
        0 => Some(Boundary::Lower),
        k if k == last => Some(Boundary::Upper),
        _ => None,
    };
    if boundary.is_some() {
        return Ok((ps[k], rs[k], boundary, trace));
    }
    let (lo, hi) = (ps[k - 1].ln(), ps[k + 1].ln());
    let (x, r) = golden_section_max(|x| objective(x.exp()), lo, hi, tol, &mut trace)?;
    let refined = x.exp();
    // the refined point is kept only if it beats the grid maximum
    let (p, r) = if r >= rs[k] { (refined, r) } else { (ps[k], rs[k]) };
    for entry in trace.iter_mut().skip(ps.len()) {
        entry.0 = entry.0.exp();
    }
    Ok((p, r, None, trace))
}

/// Revenue-maximizing exponent for one instance.
pub fn optimize_p(n: usize, alpha: f64, opts: OptimizeOptions) -> Result<DesignResult> {
    OlosInstance::new(n, alpha, 1.0)?;
    let grid = opts.grid()?;
    let (p_star, r_star, boundary, search_trace) =
        scan_and_refine(|p| equilibrium_revenue(n, alpha, p), &grid, opts.tol)?;
    Ok(DesignResult { p_star, r_star, boundary, search_trace })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for PGrid {
    fn default() -> Self {
        Self { min: 0.05, max: 50.0, points: 64 }
    }
}

/// Finite uncertainty set of instances: every pair of `alphas x ns`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustDomain {
    pub alphas: Vec<f64>,
    pub ns: Vec<usize>,
    #[serde(default)]
    pub p_grid: PGrid,
}

impl RobustDomain {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::InvalidArgument("alphas: domain needs at least one alpha".into()));
        }
        if self.ns.is_empty() {
            return Err(Error::InvalidArgument("ns: domain needs at least one n".into()));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(a.is_finite() && **a > 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "alphas: every alpha must be finite and greater than 1, got {a}"
            )));
        }
        if let Some(n) = self.ns.iter().find(|n| **n < 2) {
            return Err(Error::InvalidArgument(format!("ns: every n must be at least 2, got {n}")));
        }
        let g = &self.p_grid;
        if !(g.min > 0.0 && g.max > g.min && g.points >= 2 && g.max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "p_grid: need 0 < min < max and points >= 2, got min={} max={} points={}",
                g.min, g.max, g.points
            )));
        }
        Ok(())
    }

    /// Instances in domain order: alphas outer, ns inner.
    pub fn instances(&self) -> Vec<(f64, usize)> {
        self.alphas
            .iter()
            .flat_map(|&a| self.ns.iter().map(move |&n| (a, n)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustResult {
    pub p_tilde: f64,
    /// `min over the domain of R(n, alpha, p_tilde)`.
    pub worst_case_r: f64,
    pub argmin_alpha: f64,
    pub argmin_n: usize,
    pub boundary: Option<Boundary>,
    pub search_trace: Vec<(f64, f64)>,
}

/// Worst-case revenue over the domain at exponent `p`, with the instance that
/// attains it (first in domain order on ties).
pub fn worst_case_revenue(domain: &RobustDomain, p: f64) -> Result<(f64, (f64, usize))> {
    let instances = domain.instances();
    let rs: Vec<f64> = instances
        .par_iter()
        .map(|&(a, n)| {
            equilibrium_revenue(n, a, p).map_err(|e| match e {
                Error::Instance { .. } => e,
                other => Error::Instance { alpha: a, n, p, source: Box::new(other) },
            })
        })
        .collect::<Result<_>>()?;
    let (k, r) = rs
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, r)| if r < acc.1 { (i, r) } else { acc });
    Ok((r, instances[k]))
}

/// Exponent maximizing the worst-case revenue over the domain.
pub fn robust_p(domain: &RobustDomain, tol: f64) -> Result<RobustResult> {
    domain.validate()?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let grid = Grid::log(domain.p_grid.min, domain.p_grid.max, domain.p_grid.points);
    let (p_tilde, worst_case_r, boundary, search_trace) =
        scan_and_refine(|p| worst_case_revenue(domain, p).map(|(r, _)| r), &grid, tol)?;
    let (_, (argmin_alpha, argmin_n)) = worst_case_revenue(domain, p_tilde)?;
    Ok(RobustResult { p_tilde, worst_case_r, argmin_alpha, argmin_n, boundary, search_trace })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    P,
    Alpha,
    N,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::P => "p",
            Axis::Alpha => "alpha",
            Axis::N => "n",
        }
    }
}

/// One-parameter sweep of the equilibrium; the fixed value of the varied axis
/// is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    pub n: usize,
    pub alpha: f64,
    pub p: f64,
    pub grid: Grid,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let min = self.grid.min;
        match self.axis {
            Axis::P if !(min > 0.0) => {
                Err(Error::InvalidArgument(format!("p grid must be positive, got min {min}")))
            }
            Axis::Alpha if !(min > 1.0) => Err(Error::InvalidArgument(format!(
                "alpha grid must exceed 1, got min {min}"
            ))),
            Axis::N if !(min.round() >= 2.0) => {
                Err(Error::InvalidArgument(format!("n grid must start at 2 or more, got {min}")))
            }
            _ => {
                let probe = match self.axis {
                    Axis::P => OlosInstance::new(self.n, self.alpha, self.grid.min),
                    Axis::Alpha => OlosInstance::new(self.n, self.grid.min, self.p),
                    Axis::N => OlosInstance::new(2, self.alpha, self.p),
                };
                probe.map(|_| ())
            }
        }
    }

    /// Values of the varied parameter. On the `n` axis the grid is rounded to
    /// integers and repeated values are dropped.
    pub fn axis_values(&self) -> Vec<f64> {
        let mut values = self.grid.values();
        if self.axis == Axis::N {
            for v in &mut values {
                *v = v.round();
            }
            values.dedup();
        }
        values
    }

    fn instance(&self, value: f64) -> Result<OlosInstance> {
        match self.axis {
            Axis::P => OlosInstance::new(self.n, self.alpha, value),
            Axis::Alpha => OlosInstance::new(self.n, value, self.p),
            Axis::N => OlosInstance::new(value as usize, self.alpha, self.p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepValues {
    pub revenue: f64,
    pub z: f64,
    pub b1: f64,
    pub b2: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    pub outcome: std::result::Result<SweepValues, String>,
}

/// One row per axis value, in grid order. Failures are recorded in the row.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    Ok(spec
        .axis_values()
        .par_iter()
        .map(|&value| {
            let outcome = spec
                .instance(value)
                .and_then(|inst| {
                    let e = olos_equilibrium(&inst)?;
                    let b = revenue_bounds(&inst);
                    Ok(SweepValues {
                        revenue: e.revenue,
                        z: e.z,
                        b1: e.b1,
                        b2: e.b2,
                        lower_bound: b.lower,
                        upper_bound: b.upper,
                    })
                })
                .map_err(|e| e.to_string());
            SweepRow { axis: spec.axis, value, outcome }
        })
        .collect())
}

pub const SWEEP_CSV_HEADER: &str = "axis,value,R,z,b1,b2,lower_bound,upper_bound,status";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes sweep rows as CSV. Numbers use the shortest representation that
/// round-trips; currency columns are multiplied by `scale`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], scale: f64, mut out: W) -> io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for row in rows {
        match &row.outcome {
            Ok(v) => writeln!(
                out,
                "{},{},{},{},{},{},{},{},ok",
                row.axis.name(),
                row.value,
                v.revenue * scale,
                v.z,
                v.b1 * scale,
                v.b2 * scale,
                v.lower_bound * scale,
                v.upper_bound * scale,
            )?,
            Err(msg) => writeln!(
                out,
                "{},{},,,,,,,{}",
                row.axis.name(),
                row.value,
                csv_field(&format!("error: {msg}"))
            )?,
        }
    }
    Ok(())
}

/// Axis of a `p*` / `R*` curve together with the parameter held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StarAxis {
    Alpha { n: usize },
    N { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarRow {
    pub value: f64,
    pub outcome: std::result::Result<DesignResult, String>,
}

/// [`optimize_p`] along an axis, one row per value in the given order.
pub fn star_curves(axis: StarAxis, values: &[f64], opts: OptimizeOptions) -> Vec<StarRow> {
    values
        .par_iter()
        .map(|&value| {
            let outcome = match axis {
                StarAxis::Alpha { n } => optimize_p(n, value, opts),
                StarAxis::N { alpha } => {
                    if value.fract() != 0.0 || value < 2.0 {
                        Err(Error::InvalidArgument(format!("n must be an integer >= 2, got {value}")))
                    } else {
                        optimize_p(value as usize, alpha, opts)
                    }
                }
            }
            .map_err(|e| e.to_string());
            StarRow { value, outcome }
        })
        .collect()
}

pub const STAR_CSV_HEADER: &str = "axis,value,p_star,r_star,boundary,status";

pub fn write_star_csv<W: Write>(
    axis: StarAxis,
    rows: &[StarRow],
    scale: f64,
    mut out: W,
) -> io::Result<()> {
    let name = match axis {
        StarAxis::Alpha { .. } => "alpha",
        StarAxis::N { .. } => "n",
    };
    writeln!(out, "{STAR_CSV_HEADER}")?;
    for row in rows {
        match &row.outcome {
            Ok(d) => {
                let boundary = match d.boundary {
                    None => "",
                    Some(Boundary::Lower) => "lower",
                    Some(Boundary::Upper) => "upper",
                };
                writeln!(
                    out,
                    "{name},{},{},{},{boundary},ok",
                    row.value,
                    d.p_star,
                    d.r_star * scale
                )?
            }
            Err(msg) => writeln!(
                out,
                "{name},{},,,,{}",
                row.value,
                csv_field(&format!("error: {msg}"))
            )?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_peaked(rs: &[f64]) -> bool {
        let k = argmax(rs).unwrap();
        k > 0
            && k < rs.len() - 1
            && rs[..=k].windows(2).all(|w| w[1] > w[0])
            && rs[k..].windows(2).all(|w| w[1] < w[0])
    }

    #[test]
    fn optimize_two_bidders_high_alpha_beats_second_price() {
        let d = optimize_p(2, 10.0, OptimizeOptions::default()).unwrap();
        assert!(d.r_star > 1.0);
        assert!(d.boundary.is_none());
        for &(_, r) in &d.search_trace {
            assert!(d.r_star >= r);
        }
        let upper = revenue_bounds(&OlosInstance::new(2, 10.0, d.p_star).unwrap()).upper;
        assert!(d.r_star < upper);
    }

    #[test]
    fn optimize_more_bidders_more_revenue() {
        let small = optimize_p(2, 3.0, OptimizeOptions::default()).unwrap();
        let large = optimize_p(20, 3.0, OptimizeOptions::default()).unwrap();
        assert!(large.r_star > 1.0);
        assert!(large.r_star > small.r_star);
    }

    #[test]
    fn optimal_exponent_falls_with_alpha() {
        let a3 = optimize_p(2, 3.0, OptimizeOptions::default()).unwrap();
        let a10 = optimize_p(2, 10.0, OptimizeOptions::default()).unwrap();
        assert!(a10.p_star < a3.p_star);
    }

    #[test]
    fn optimize_is_a_local_maximum() {
        let opts = OptimizeOptions::default();
        for (n, a) in [(2, 1.5), (2, 3.0), (5, 2.0), (20, 10.0), (100, 100.0)] {
            let d = optimize_p(n, a, opts).unwrap();
            let delta = 10.0 * opts.tol * d.p_star;
            let r = |p| equilibrium_revenue(n, a, p).unwrap();
            assert!(d.r_star >= r(d.p_star + delta), "n={n} a={a}");
            assert!(d.r_star >= r(d.p_star - delta), "n={n} a={a}");
        }
    }

    #[test]
    fn small_alpha_prefers_convex_weights() {
        for n in [2, 20] {
            for a in [1.1, 1.5, 2.0] {
                let d = optimize_p(n, a, OptimizeOptions::default()).unwrap();
                assert!(d.p_star > 1.0, "n={n} alpha={a}: {}", d.p_star);
            }
        }
    }

    #[test]
    fn flat_landscape_is_flagged() {
        let opts = OptimizeOptions { p_min: 0.05, p_max: 0.5, ..Default::default() };
        let d = optimize_p(2, 3.0, opts).unwrap();
        assert_eq!(d.boundary, Some(Boundary::Upper));
        assert_eq!(d.p_star, 0.5);
    }

    #[test]
    fn optimize_rejects_bad_input() {
        assert!(optimize_p(1, 2.0, OptimizeOptions::default()).is_err());
        assert!(optimize_p(2, 1.0, OptimizeOptions::default()).is_err());
        let bad = OptimizeOptions { p_min: 2.0, p_max: 1.0, ..Default::default() };
        assert!(optimize_p(2, 2.0, bad).is_err());
        let bad = OptimizeOptions { p_min: 0.0, ..Default::default() };
        assert!(optimize_p(2, 2.0, bad).is_err());
    }

    #[test]
    fn robust_singleton_matches_optimize() {
        let domain = RobustDomain { alphas: vec![3.0], ns: vec![2], p_grid: PGrid::default() };
        let r = robust_p(&domain, 1e-6).unwrap();
        let d = optimize_p(2, 3.0, OptimizeOptions::default()).unwrap();
        assert!((r.p_tilde - d.p_star).abs() <= 1e-6 * d.p_star * 10.0);
        assert_eq!(r.worst_case_r, d.r_star);
        assert_eq!((r.argmin_alpha, r.argmin_n), (3.0, 2));
    }

    #[test]
    fn robust_is_bounded_by_each_optimum() {
        let domain =
            RobustDomain { alphas: vec![2.0, 3.0], ns: vec![2, 5], p_grid: PGrid::default() };
        let r = robust_p(&domain, 1e-6).unwrap();
        for (a, n) in domain.instances() {
            let d = optimize_p(n, a, OptimizeOptions::default()).unwrap();
            assert!(r.worst_case_r <= d.r_star + 1e-9);
        }
        for &(p, phi) in &r.search_trace {
            assert!(r.worst_case_r >= phi, "p={p}");
        }
    }

    #[test]
    fn robust_interior_peak() {
        let domain = RobustDomain { alphas: vec![3.0, 10.0], ns: vec![2], p_grid: PGrid::default() };
        let r = robust_p(&domain, 1e-6).unwrap();
        assert!(r.worst_case_r > 0.0);
        assert!(r.boundary.is_none());
        assert!(r.p_tilde > domain.p_grid.min && r.p_tilde < domain.p_grid.max);
    }

    #[test]
    fn robust_domain_validation() {
        let ok = RobustDomain { alphas: vec![2.0], ns: vec![2], p_grid: PGrid::default() };
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.alphas = vec![1.0];
        assert!(bad.validate().unwrap_err().to_string().contains("alphas"));
        let mut bad = ok.clone();
        bad.ns = vec![1];
        assert!(bad.validate().unwrap_err().to_string().contains("ns"));
        let mut bad = ok.clone();
        bad.p_grid.points = 1;
        assert!(bad.validate().unwrap_err().to_string().contains("p_grid"));
        let mut bad = ok;
        bad.alphas.clear();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn sweep_over_p_is_single_peaked() {
        let spec = SweepSpec { axis: Axis::P, n: 2, alpha: 3.0, p: 1.0, grid: Grid::log(0.1, 20.0, 64) };
        let rows = sweep(&spec).unwrap();
        assert_eq!(rows.len(), 64);
        let rs: Vec<f64> = rows.iter().map(|r| r.outcome.as_ref().unwrap().revenue).collect();
        assert!(single_peaked(&rs));
    }

    #[test]
    fn sweep_over_alpha_is_increasing() {
        let spec =
            SweepSpec { axis: Axis::Alpha, n: 2, alpha: 2.0, p: 3.0, grid: Grid::linear(1.1, 10.0, 50) };
        let rs: Vec<f64> =
            sweep(&spec).unwrap().iter().map(|r| r.outcome.as_ref().unwrap().revenue).collect();
        assert!(rs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn sweep_over_n_rises_then_falls() {
        let spec = SweepSpec { axis: Axis::N, n: 2, alpha: 1.5, p: 3.0, grid: Grid::linear(2.0, 200.0, 199) };
        let rows = sweep(&spec).unwrap();
        assert_eq!(rows.len(), 199);
        let rs: Vec<f64> = rows.iter().map(|r| r.outcome.as_ref().unwrap().revenue).collect();
        assert!(single_peaked(&rs));
    }

    #[test]
    fn sweep_n_axis_rounds_and_dedups() {
        let spec = SweepSpec { axis: Axis::N, n: 2, alpha: 1.5, p: 3.0, grid: Grid::log(2.0, 10.0, 20) };
        let values = spec.axis_values();
        assert!(values.windows(2).all(|w| w[1] > w[0]));
        assert!(values.iter().all(|v| v.fract() == 0.0));
        assert_eq!(values.first(), Some(&2.0));
        assert_eq!(values.last(), Some(&10.0));
    }

    #[test]
    fn sweep_validation() {
        let mut spec = SweepSpec { axis: Axis::Alpha, n: 2, alpha: 2.0, p: 1.0, grid: Grid::linear(0.5, 3.0, 4) };
        assert!(sweep(&spec).is_err());
        spec.axis = Axis::P;
        spec.alpha = 1.0;
        assert!(sweep(&spec).is_err());
    }

    #[test]
    fn sweep_csv_format_is_stable() {
        let spec = SweepSpec { axis: Axis::P, n: 2, alpha: 2.0, p: 1.0, grid: Grid::linear(1.0, 2.0, 2) };
        let rows = sweep(&spec).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&rows, 1.0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(SWEEP_CSV_HEADER));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 9);
        assert_eq!(first[0], "p");
        assert_eq!(first[1], "1");
        assert_eq!(first[2].parse::<f64>().unwrap(), rows[0].outcome.as_ref().unwrap().revenue);
        assert_eq!(first[8], "ok");

        let again = sweep(&spec).unwrap();
        let mut buf2 = Vec::new();
        write_sweep_csv(&again, 1.0, &mut buf2).unwrap();
        assert_eq!(text.as_bytes(), &buf2[..]);
    }

    #[test]
    fn failed_rows_are_kept() {
        let rows = vec![SweepRow { axis: Axis::P, value: 1.0, outcome: Err("bad, worse".into()) }];
        let mut buf = Vec::new();
        write_sweep_csv(&rows, 1.0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1), Some("p,1,,,,,,,\"error: bad, worse\""));
    }

    #[test]
    fn star_curves_over_alpha() {
        let values = [1.5, 2.0, 3.0, 5.0, 10.0];
        let rows = star_curves(StarAxis::Alpha { n: 2 }, &values, OptimizeOptions::default());
        let ds: Vec<&DesignResult> = rows.iter().map(|r| r.outcome.as_ref().unwrap()).collect();
        assert!(ds.windows(2).all(|w| w[1].r_star > w[0].r_star));
        assert!(ds.windows(2).all(|w| w[1].p_star < w[0].p_star));
    }

    #[test]
    fn star_curves_over_n() {
        let values: Vec<f64> = (2..=12).map(f64::from).collect();
        let rows = star_curves(StarAxis::N { alpha: 3.0 }, &values, OptimizeOptions::default());
        let rs: Vec<f64> = rows.iter().map(|r| r.outcome.as_ref().unwrap().r_star).collect();
        let ps: Vec<f64> = rows.iter().map(|r| r.outcome.as_ref().unwrap().p_star).collect();
        let inc: Vec<f64> = rs.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(inc.iter().all(|&d| d > 0.0));
        assert!(inc.windows(2).all(|w| w[1] < w[0]));
        let (lo, hi) = ps.iter().fold((f64::INFINITY, 0.0_f64), |(l, h), &p| (l.min(p), h.max(p)));
        assert!(hi / lo < 2.0, "p* range {lo}..{hi}");
        let bad = star_curves(StarAxis::N { alpha: 3.0 }, &[2.5], OptimizeOptions::default());
        assert!(bad[0].outcome.is_err());
    }
}
