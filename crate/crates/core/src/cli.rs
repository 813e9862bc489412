//! `qprop` command line.
//!
//! Results go to stdout as JSON (default) or `key,value` CSV; sweep tables are
//! always CSV. Diagnostics go to stderr. Exit codes: 0 success, 2 usage or
//! invalid input, 3 all-zero bids, 4 no convergence, 5 root bracket failure,
//! 1 I/O failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::auction::{allocate, BidProfile, ValuationProfile, WeightExponent};
use crate::design::{
    optimize_p, robust_p, star_curves, sweep, write_star_csv, write_sweep_csv, Axis,
    OptimizeOptions, RobustDomain, StarAxis, SweepSpec,
};
use crate::equilibrium::{
    revenue, solve_fixed_point, verify_nash, SolveOptions, DEFAULT_EPSILON, DEFAULT_GRID_POINTS,
};
use crate::error::Error;
use crate::olos::{olos_equilibrium, revenue_bounds, OlosInstance};
use crate::search::Grid;

pub const SCHEMA_VERSION: u32 = 1;
pub const THREADS_ENV: &str = "QPROP_THREADS";

pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const DEGENERATE: i32 = 3;
    pub const CONVERGENCE: i32 = 4;
    pub const BRACKET: i32 = 5;
}

#[derive(Debug, Parser)]
#[command(name = "qprop", version, about = "Quasi-proportional auction equilibria and exponent design")]
struct Cli {
    /// Output format for single-record results.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Allocation shares and revenue for a bid vector.
    Allocate {
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        bids: Vec<f64>,
        #[arg(long)]
        p: f64,
    },
    /// Equilibrium for arbitrary valuations by damped best-response iteration.
    Solve(SolveArgs),
    /// One large bidder (value alpha) against n-1 bidders of value 1.
    Olos {
        /// Multiplies every currency output (bids, revenue, bounds).
        #[arg(long, default_value_t = 1.0, global = true)]
        scale: f64,
        #[command(subcommand)]
        action: OlosAction,
    },
    /// Exponent maximizing the worst-case revenue over a domain file.
    Robust {
        /// JSON file: {"alphas": [...], "ns": [...], "p_grid": {"min", "max", "points"}}.
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        p_min: Option<f64>,
        #[arg(long)]
        p_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    values: Vec<f64>,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
    /// Run the brute-force deviation check on the result.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

#[derive(Debug, Args)]
struct InstanceArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    p: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VaryAxis {
    P,
    Alpha,
    N,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StarAxisArg {
    Alpha,
    N,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(long, default_value_t = 0.05)]
    p_min: f64,
    #[arg(long, default_value_t = 50.0)]
    p_max: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Points of the coarse log-spaced scan.
    #[arg(long = "scan-points", default_value_t = 64)]
    scan_points: usize,
}

impl OptimizeArgs {
    fn options(&self) -> OptimizeOptions {
        OptimizeOptions {
            p_min: self.p_min,
            p_max: self.p_max,
            tol: self.tol,
            coarse_points: self.scan_points,
        }
    }
}

#[derive(Debug, Subcommand)]
enum OlosAction {
    /// Equilibrium bids, revenue and first-order-condition residuals.
    Solve(InstanceArgs),
    /// Lower and upper bounds on equilibrium revenue.
    Bounds(InstanceArgs),
    /// Table of the equilibrium along one parameter.
    Sweep {
        #[arg(long, value_enum)]
        vary: VaryAxis,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long)]
        min: f64,
        #[arg(long)]
        max: f64,
        #[arg(long)]
        points: usize,
        /// Log-spaced grid (linear otherwise).
        #[arg(long)]
        log: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Revenue-maximizing exponent.
    Optimize {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        search: OptimizeArgs,
    },
    /// Optimal exponent and revenue along alpha (fixed n) or n (fixed alpha).
    Star {
        #[arg(long, value_enum)]
        axis: StarAxisArg,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long)]
        min: f64,
        #[arg(long)]
        max: f64,
        #[arg(long)]
        points: usize,
        #[arg(long)]
        log: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        search: OptimizeArgs,
    },
}

/// Failure of a command: exit code, message, and an optional partial record
/// still printed to stdout.
struct Failure {
    code: i32,
    message: String,
    partial: Option<(Value, Value)>,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root_cause() {
            Error::AllZeroBids => exit::DEGENERATE,
            Error::ConvergenceFailure { .. } => exit::CONVERGENCE,
            Error::BracketFailure { .. } => exit::BRACKET,
            _ => exit::USAGE,
        };
        Failure { code, message: e.to_string(), partial: None }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: exit::IO, message: e.to_string(), partial: None }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: exit::USAGE, message: message.into(), partial: None }
}

enum Output {
    /// `(parameters, results)` of a single record.
    Record(Value, Value),
    /// Pre-rendered table, already written to a file when `None`.
    Table(Option<Vec<u8>>),
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    configure_threads(stderr);

    let echo: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let name = command_name(&cli.command);
    let started = Instant::now();
    let result = execute(&cli.command);
    let timing_ms = started.elapsed().as_secs_f64() * 1e3;

    let emit = |stdout: &mut dyn Write, params: Value, results: Value| -> std::io::Result<()> {
        let record = json!({
            "schema_version": SCHEMA_VERSION,
            "command": name,
            "args": echo,
            "parameters": params,
            "results": results,
            "timing_ms": timing_ms,
        });
        match cli.format {
            Format::Json => writeln!(stdout, "{}", serde_json::to_string_pretty(&record)?),
            Format::Csv => {
                let mut rows = Vec::new();
                flatten("", &record["results"], &mut rows);
                writeln!(stdout, "key,value")?;
                for (k, v) in rows {
                    writeln!(stdout, "{k},{v}")?;
                }
                Ok(())
            }
        }
    };

    match result {
        Ok(Output::Record(params, results)) => match emit(stdout, params, results) {
            Ok(()) => exit::OK,
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                exit::IO
            }
        },
        Ok(Output::Table(bytes)) => {
            if let Some(bytes) = bytes {
                if let Err(e) = stdout.write_all(&bytes) {
                    let _ = writeln!(stderr, "error: {e}");
                    return exit::IO;
                }
            }
            exit::OK
        }
        Err(failure) => {
            if let Some((params, results)) = failure.partial {
                let _ = emit(stdout, params, results);
            }
            let _ = writeln!(stderr, "error: {}", failure.message);
            failure.code
        }
    }
}

fn configure_threads(stderr: &mut dyn Write) {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return };
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            // a global pool can only be installed once per process
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => {
            let _ = writeln!(stderr, "warning: ignoring {THREADS_ENV}={raw:?}, expected a positive integer");
        }
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Allocate { .. } => "allocate",
        Command::Solve(_) => "solve",
        Command::Robust { .. } => "robust",
        Command::Olos { action, .. } => match action {
            OlosAction::Solve(_) => "olos solve",
            OlosAction::Bounds(_) => "olos bounds",
            OlosAction::Sweep { .. } => "olos sweep",
            OlosAction::Optimize { .. } => "olos optimize",
            OlosAction::Star { .. } => "olos star",
        },
    }
}

fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, rows);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), v, rows);
            }
        }
        Value::Null => rows.push((prefix.to_string(), String::new())),
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

fn exponent(p: f64) -> Result<WeightExponent, Failure> {
    Ok(WeightExponent::new(p)?)
}

fn execute(command: &Command) -> Result<Output, Failure> {
    match command {
        Command::Allocate { bids, p } => cmd_allocate(bids, *p),
        Command::Solve(args) => cmd_solve(args),
        Command::Olos { scale, action } => {
            if !(scale.is_finite() && *scale > 0.0) {
                return Err(usage(format!("--scale must be finite and positive, got {scale}")));
            }
            cmd_olos(action, *scale)
        }
        Command::Robust { domain, p_min, p_max, points, tol } => {
            cmd_robust(domain, *p_min, *p_max, *points, *tol)
        }
    }
}

fn cmd_allocate(bids: &[f64], p: f64) -> Result<Output, Failure> {
    let pw = exponent(p)?;
    let profile = BidProfile::new(bids.to_vec())?;
    let shares = allocate(&profile, pw)?;
    let r = revenue(&profile, pw)?;
    Ok(Output::Record(
        json!({ "bids": bids, "p": p }),
        json!({ "allocations": shares, "revenue": r }),
    ))
}

fn cmd_solve(args: &SolveArgs) -> Result<Output, Failure> {
    let pw = exponent(args.p)?;
    let values = ValuationProfile::new(args.values.clone())?;
    let opts = SolveOptions { tol: args.tol, max_iter: args.max_iter, damping: args.damping };
    let params = json!({
        "values": args.values,
        "p": args.p,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "damping": args.damping,
    });
    let eq = match solve_fixed_point(&values, pw, opts) {
        Ok(eq) => eq,
        Err(Error::ConvergenceFailure { iterations, residual, best, .. }) => {
            let best = best.unwrap_or_default();
            let rev = BidProfile::new(best.clone())
                .ok()
                .and_then(|b| revenue(&b, pw).ok());
            return Err(Failure {
                code: exit::CONVERGENCE,
                message: format!(
                    "best-response iteration did not converge after {iterations} iterations (residual {residual:e})"
                ),
                partial: Some((
                    params,
                    json!({
                        "status": "convergence_failure",
                        "bids": best,
                        "revenue": rev,
                        "residual": residual,
                        "iterations": iterations,
                    }),
                )),
            });
        }
        Err(e) => return Err(e.into()),
    };
    let mut results = json!({
        "status": "ok",
        "bids": eq.bids,
        "revenue": eq.revenue,
        "residual": eq.residual,
        "iterations": eq.iterations,
        "lower_bounds": eq.bounds_used,
    });
    if args.verify {
        let report = verify_nash(&eq.bids, &values, pw, args.grid_points, args.epsilon)?;
        results["nash"] = serde_json::to_value(&report).map_err(|e| usage(e.to_string()))?;
    }
    Ok(Output::Record(params, results))
}

fn write_table(out: Option<&PathBuf>, bytes: Vec<u8>) -> Result<Output, Failure> {
    match out {
        None => Ok(Output::Table(Some(bytes))),
        Some(path) => {
            write_atomic(path, &bytes)?;
            Ok(Output::Table(None))
        }
    }
}

/// Writes `bytes` to a temporary file next to `path`, then renames it over `path`.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn grid(min: f64, max: f64, points: usize, log: bool) -> Result<Grid, Failure> {
    let g = if log { Grid::log(min, max, points) } else { Grid::linear(min, max, points) };
    g.validate()?;
    Ok(g)
}

fn cmd_olos(action: &OlosAction, scale: f64) -> Result<Output, Failure> {
    match action {
        OlosAction::Solve(a) => {
            let inst = OlosInstance::new(a.n, a.alpha, a.p)?;
            let e = olos_equilibrium(&inst)?;
            Ok(Output::Record(
                json!({ "n": a.n, "alpha": a.alpha, "p": a.p, "scale": scale }),
                json!({
                    "z": e.z,
                    "b1": e.b1 * scale,
                    "b2": e.b2 * scale,
                    "revenue": e.revenue * scale,
                    "w_aux": e.w_aux,
                    "foc_residuals": e.foc_residuals,
                }),
            ))
        }
        OlosAction::Bounds(a) => {
            let inst = OlosInstance::new(a.n, a.alpha, a.p)?;
            let b = revenue_bounds(&inst);
            Ok(Output::Record(
                json!({ "n": a.n, "alpha": a.alpha, "p": a.p, "scale": scale }),
                json!({ "lower": b.lower * scale, "upper": b.upper * scale }),
            ))
        }
        OlosAction::Sweep { vary, n, alpha, p, min, max, points, log, out } => {
            let axis = match vary {
                VaryAxis::P => Axis::P,
                VaryAxis::Alpha => Axis::Alpha,
                VaryAxis::N => Axis::N,
            };
            let spec = SweepSpec {
                axis,
                n: *n,
                alpha: *alpha,
                p: *p,
                grid: grid(*min, *max, *points, *log)?,
            };
            let rows = sweep(&spec)?;
            let mut bytes = Vec::new();
            write_sweep_csv(&rows, scale, &mut bytes)?;
            write_table(out.as_ref(), bytes)
        }
        OlosAction::Optimize { n, alpha, search } => {
            let d = optimize_p(*n, *alpha, search.options())?;
            Ok(Output::Record(
                json!({
                    "n": n,
                    "alpha": alpha,
                    "p_min": search.p_min,
                    "p_max": search.p_max,
                    "tol": search.tol,
                    "scan_points": search.scan_points,
                    "scale": scale,
                }),
                json!({
                    "p_star": d.p_star,
                    "r_star": d.r_star * scale,
                    "boundary": d.boundary,
                    "evaluations": d.search_trace.len(),
                }),
            ))
        }
        OlosAction::Star { axis, n, alpha, min, max, points, log, out, search } => {
            let star_axis = match axis {
                StarAxisArg::Alpha => StarAxis::Alpha { n: *n },
                StarAxisArg::N => StarAxis::N { alpha: *alpha },
            };
            let mut values = grid(*min, *max, *points, *log)?.values();
            if matches!(axis, StarAxisArg::N) {
                for v in &mut values {
                    *v = v.round();
                }
                values.dedup();
            }
            let rows = star_curves(star_axis, &values, search.options());
            let mut bytes = Vec::new();
            write_star_csv(star_axis, &rows, scale, &mut bytes)?;
            write_table(out.as_ref(), bytes)
        }
    }
}

fn cmd_robust(
    path: &Path,
    p_min: Option<f64>,
    p_max: Option<f64>,
    points: Option<usize>,
    tol: f64,
) -> Result<Output, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read domain file {}: {e}", path.display())))?;
    let mut domain: RobustDomain = serde_json::from_str(&text)
        .map_err(|e| usage(format!("malformed domain file {}: {e}", path.display())))?;
    if let Some(v) = p_min {
        domain.p_grid.min = v;
    }
    if let Some(v) = p_max {
        domain.p_grid.max = v;
    }
    if let Some(v) = points {
        domain.p_grid.points = v;
    }
    domain.validate()?;
    let r = robust_p(&domain, tol)?;
    Ok(Output::Record(
        json!({ "domain": domain, "tol": tol }),
        json!({
            "p_tilde": r.p_tilde,
            "worst_case_r": r.worst_case_r,
            "argmin": { "alpha": r.argmin_alpha, "n": r.argmin_n },
            "boundary": r.boundary,
            "evaluations": r.search_trace.len(),
        }),
    ))
}
