//! Batch command-line runs producing CSV.
//!
//! Every output starts with `#` comment lines echoing the version, command,
//! options and the full parameter grid, followed by a header row. Grid
//! points are processed concurrently and written in grid order, so equal
//! inputs give byte-identical output.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use rayon::prelude::*;

use crate::closed_form::{solve_iid_with_eps, solve_with_eps, Candidate};
use crate::error::{Error, Result};
use crate::mdp::{relative_value_iteration, CostFunction, OracleOptions};
use crate::model::{classify_region, classify_region_discounted, ChannelParams};
use crate::sim::{age_optimal_policy, compare_policies, simulate, SimConfig, SimResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Region label and sign functions.
    Classify,
    /// Exact optimal average age and threshold policy.
    Solve,
    /// Closed form against relative value iteration.
    OracleCheck,
    /// Simulate the age-optimal policy.
    Simulate,
    /// Simulate the age-optimal policy and the three baselines.
    Compare,
    /// Optimal threshold for an i.i.d. Channel 1 over a grid of p.
    SweepThreshold,
    /// Policy comparison over a grid of q.
    SweepAge,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Solve => "solve",
            Command::OracleCheck => "oracle-check",
            Command::Simulate => "simulate",
            Command::Compare => "compare",
            Command::SweepThreshold => "sweep-threshold",
            Command::SweepAge => "sweep-age",
        }
    }
}

/// A complete run description.
///
/// `--p`, `--q` and `--d` take comma-separated values or `start:step:end`
/// ranges; the grid is their cartesian product in `p`, `q`, `d` order.
#[derive(Debug, Clone, Parser)]
#[command(name = "aoi-hetero", version, about = "Age-optimal scheduling over mmWave and sub-6GHz channels")]
pub struct RunSpec {
    #[arg(value_enum)]
    pub command: Command,
    /// Channel 1 OFF-to-OFF probability.
    #[arg(long)]
    pub p: Option<String>,
    /// Channel 1 ON-to-ON probability.
    #[arg(long)]
    pub q: Option<String>,
    /// Channel 2 service time in slots.
    #[arg(long)]
    pub d: Option<String>,
    /// CSV file with a `p,q,d` header; replaces --p/--q/--d.
    #[arg(long, conflicts_with_all = ["p", "q", "d"])]
    pub grid_file: Option<PathBuf>,
    /// Discount factor; classify then uses the discounted sign functions.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Ages are clamped here; must exceed 20 d for the oracles.
    #[arg(long, default_value_t = 2000)]
    pub age_cap: u64,
    /// Relative stopping tolerance of the value-iteration oracles.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Bisection tolerance on beta.
    #[arg(long, default_value_t = 1e-9)]
    pub eps: f64,
    /// Base seed; replication r uses streams 2r and 2r+1.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Slots per replication, warmup included.
    #[arg(long, default_value_t = 1_000_000)]
    pub horizon: u64,
    #[arg(long, default_value_t = 20)]
    pub replications: u32,
    /// Slots discarded per replication; derived from the channel when absent.
    #[arg(long)]
    pub warmup: Option<u64>,
    /// `linear` or `exp:<eta>`.
    #[arg(long, default_value = "linear")]
    pub cost: String,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunSpec {
    fn cost_fn(&self) -> Result<CostFunction> {
        self.cost.parse()
    }

    fn oracle_options(&self) -> OracleOptions {
        OracleOptions {
            age_cap: self.age_cap,
            tol: self.tol,
            ..OracleOptions::default()
        }
    }

    fn sim_config(&self) -> SimConfig {
        SimConfig {
            horizon: self.horizon,
            replications: self.replications,
            seed: self.seed,
            warmup: self.warmup,
            histogram: false,
        }
    }
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParams(_)
        | Error::InvalidDiscount(_)
        | Error::InvalidConfig(_)
        | Error::CapTooSmall { .. }
        | Error::NotIid(_)
        | Error::OutsideThresholdRegion { .. }
        | Error::OutsideDomain { .. }
        | Error::StateOutOfBounds { .. }
        | Error::InadmissibleAction { .. } => 2,
        Error::BracketFailure { .. } => 3,
        Error::NonConvergence { .. } => 4,
        Error::Io(_) | Error::Csv(_) => 5,
        Error::IdentityViolated { .. } | Error::RecurrentClasses(_) | Error::SingularSystem => 1,
    }
}

/// Single-line `key=value` description of an error for stderr.
pub fn error_line(err: &Error) -> String {
    let kind = match err {
        Error::InvalidParams(_) => "invalid_params",
        Error::InvalidDiscount(_) => "invalid_discount",
        Error::InvalidConfig(_) => "invalid_config",
        Error::CapTooSmall { .. } => "cap_too_small",
        Error::NotIid(_) => "not_iid",
        Error::OutsideThresholdRegion { .. } => "outside_threshold_region",
        Error::OutsideDomain { .. } => "outside_domain",
        Error::StateOutOfBounds { .. } => "state_out_of_bounds",
        Error::InadmissibleAction { .. } => "inadmissible_action",
        Error::BracketFailure { .. } => "bracket_failure",
        Error::NonConvergence { .. } => "nonconvergence",
        Error::Io(_) => "io",
        Error::Csv(_) => "csv",
        Error::IdentityViolated { .. } => "identity_violated",
        Error::RecurrentClasses(_) => "recurrent_classes",
        Error::SingularSystem => "singular_system",
    };
    let message = err.to_string().replace('"', "'");
    format!("error kind={kind} code={} message=\"{message}\"", exit_code(err))
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// Parse `a,b,c` or `start:step:end` into values.
fn parse_list<T: std::str::FromStr>(flag: &str, raw: &str) -> Result<Vec<T>> {
    let bad = |v: &str| Error::InvalidConfig(format!("--{flag}: cannot parse '{v}'"));
    let mut out = Vec::new();
    for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(v.parse().map_err(|_| bad(v))?),
            [start, step, end] => {
                let (a, h, b): (f64, f64, f64) = (
                    start.parse().map_err(|_| bad(start))?,
                    step.parse().map_err(|_| bad(step))?,
                    end.parse().map_err(|_| bad(end))?,
                );
                if h.is_nan() || h <= 0.0 || b < a {
                    return Err(bad(item));
                }
                let decimals = [start, step, end]
                    .iter()
                    .map(|s| s.split_once('.').map_or(0, |(_, frac)| frac.len()))
                    .max()
                    .unwrap_or(0);
                let count = ((b - a) / h + 1e-9).floor() as u64;
                if count > 1_000_000 {
                    return Err(Error::InvalidConfig(format!("--{flag}: range '{item}' is too long")));
                }
                for k in 0..=count {
                    let v = format!("{:.*}", decimals, a + k as f64 * h);
                    out.push(v.parse().map_err(|_| bad(&v))?);
                }
            }
            _ => return Err(bad(item)),
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidConfig(format!("--{flag} is empty")));
    }
    Ok(out)
}

/// Raw `(p, q, d)` points in grid order, validated.
fn grid(spec: &RunSpec, defaults: [Option<&str>; 3]) -> Result<Vec<ChannelParams>> {
    let raw: Vec<(f64, f64, u32)> = if let Some(path) = &spec.grid_file {
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
        let mut pts = Vec::new();
        for row in reader.deserialize::<(f64, f64, u32)>() {
            pts.push(row?);
        }
        pts
    } else {
        let pick = |v: &Option<String>, flag: &str, default: Option<&str>| -> Result<String> {
            v.clone()
                .or(default.map(str::to_string))
                .ok_or_else(|| Error::InvalidConfig(format!("--{flag} (or --grid-file) is required")))
        };
        let ps: Vec<f64> = parse_list("p", &pick(&spec.p, "p", defaults[0])?)?;
        let qs: Vec<f64> = parse_list("q", &pick(&spec.q, "q", defaults[1])?)?;
        let ds: Vec<u32> = parse_list("d", &pick(&spec.d, "d", defaults[2])?)?;
        let mut pts = Vec::new();
        for &p in &ps {
            for &q in &qs {
                for &d in &ds {
                    pts.push((p, q, d));
                }
            }
        }
        pts
    };
    if raw.is_empty() {
        return Err(Error::InvalidConfig("parameter grid is empty".into()));
    }
    raw.into_iter().map(|(p, q, d)| ChannelParams::new(p, q, d)).collect()
}

fn header(spec: &RunSpec, points: &[ChannelParams], extra: &[String]) -> String {
    let mut h = String::new();
    let _ = writeln!(h, "# aoi-hetero {VERSION}");
    let _ = writeln!(h, "# command={}", spec.command.name());
    let opt = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
    let _ = writeln!(
        h,
        "# cost={} alpha={} age_cap={} tol={} eps={} seed={} horizon={} replications={} warmup={}",
        spec.cost,
        spec.alpha.map_or("none".into(), num),
        spec.age_cap,
        num(spec.tol),
        num(spec.eps),
        spec.seed,
        spec.horizon,
        spec.replications,
        opt(spec.warmup.map(|w| w.to_string())),
    );
    let _ = writeln!(h, "# grid_points={}", points.len());
    let listed: Vec<String> = points
        .iter()
        .map(|p| format!("({},{},{})", num(p.p()), num(p.q()), p.d()))
        .collect();
    let _ = writeln!(h, "# grid(p,q,d)={}", listed.join(";"));
    for line in extra {
        let _ = writeln!(h, "# {line}");
    }
    h
}

fn write_csv(head: String, columns: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(columns)?;
    for row in rows {
        w.write_record(row)?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(head + &String::from_utf8(body).expect("CSV fields are UTF-8"))
}

/// Evaluate `job` on every grid point concurrently, keeping grid order and
/// returning the first error in that order.
fn per_point<T: Send>(
    points: &[ChannelParams],
    job: impl Fn(&ChannelParams) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    points.par_iter().map(&job).collect::<Vec<_>>().into_iter().collect()
}

fn sim_rows(results: &[SimResult]) -> Vec<Vec<String>> {
    results
        .iter()
        .map(|r| {
            vec![
                r.policy_name.clone(),
                num(r.mean),
                num(r.std_error),
                r.horizon.to_string(),
                r.seed.to_string(),
            ]
        })
        .collect()
}

/// `p` at which always using Channel 1 and always using Channel 2 have the
/// same average age, for the given `q` and `d`.
pub fn balanced_p(q: f64, d: u32) -> Result<f64> {
    let target = (3.0 * f64::from(d) - 1.0) / 2.0;
    let ch1 = |p: f64| ((1.0 - q) * (2.0 - p) + (1.0 - p) * (1.0 - p)) / ((2.0 - q - p) * (1.0 - p));
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
    if ch1(lo) >= target {
        return Err(Error::InvalidConfig(format!(
            "no p balances the baselines for q = {q}, d = {d}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ch1(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Execute a run and return the CSV text.
pub fn run(spec: &RunSpec) -> Result<String> {
    if let Some(alpha) = spec.alpha {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidDiscount(alpha));
        }
    }
    let cost = spec.cost_fn()?;
    match spec.command {
        Command::Classify => {
            let points = grid(spec, [None, None, None])?;
            let rows = per_point(&points, |pr| {
                let info = match spec.alpha {
                    Some(alpha) => classify_region_discounted(pr, alpha)?,
                    None => classify_region(pr),
                };
                Ok(vec![
                    num(pr.p()),
                    num(pr.q()),
                    pr.d().to_string(),
                    num(info.f),
                    num(info.g),
                    num(info.h),
                    info.region.to_string(),
                ])
            })?;
            write_csv(header(spec, &points, &[]), &["p", "q", "d", "F", "G", "H", "region"], &rows)
        }
        Command::Solve => {
            let points = grid(spec, [None, None, None])?;
            let rows = per_point(&points, |pr| {
                let r = solve_with_eps(pr, spec.eps)?;
                let argmin: Vec<&str> = r.argmin.iter().map(|c| c.name()).collect();
                Ok(vec![
                    num(pr.p()),
                    num(pr.q()),
                    pr.d().to_string(),
                    r.region.region.to_string(),
                    num(r.delta_opt),
                    r.policy.dir0.to_string(),
                    r.policy.lambda0.to_string(),
                    r.policy.dir1.to_string(),
                    r.policy.lambda1.to_string(),
                    r.policy.lambda1_set.to_string(),
                    argmin.join(";"),
                ])
            })?;
            write_csv(
                header(spec, &points, &[]),
                &[
                    "p",
                    "q",
                    "d",
                    "region",
                    "delta_opt",
                    "dir0",
                    "lambda0",
                    "dir1",
                    "lambda1",
                    "lambda1_set",
                    "argmin_candidates",
                ],
                &rows,
            )
        }
        Command::OracleCheck => {
            if !cost.is_linear() {
                return Err(Error::InvalidConfig("oracle-check compares against the linear-cost closed form".into()));
            }
            let points = grid(spec, [None, None, None])?;
            let opts = spec.oracle_options();
            let results = per_point(&points, |pr| {
                let exact = solve_with_eps(pr, spec.eps)?;
                let gain = relative_value_iteration(pr, &cost, &opts)?
                    .gain
                    .expect("average-cost solution has a gain");
                Ok((exact, gain))
            })?;
            let mut worst: f64 = 0.0;
            let rows: Vec<Vec<String>> = results
                .iter()
                .map(|(exact, gain)| {
                    let rel = (exact.delta_opt - gain).abs() / gain.abs();
                    worst = worst.max(rel);
                    let pr = &exact.params;
                    vec![
                        num(pr.p()),
                        num(pr.q()),
                        pr.d().to_string(),
                        exact.region.region.to_string(),
                        num(exact.delta_opt),
                        num(*gain),
                        num(rel),
                    ]
                })
                .collect();
            let extra = [format!("max_rel_err={}", num(worst))];
            write_csv(
                header(spec, &points, &extra),
                &["p", "q", "d", "region", "delta_opt", "rvi_gain", "rel_err"],
                &rows,
            )
        }
        Command::Simulate | Command::Compare => {
            let points = grid(spec, [None, None, None])?;
            let config = spec.sim_config();
            let opts = spec.oracle_options();
            let blocks = per_point(&points, |pr| {
                if spec.command == Command::Compare {
                    compare_policies(pr, &cost, &config, &opts)
                } else {
                    let pol = age_optimal_policy(pr, &cost, &opts)?;
                    Ok(vec![simulate(&*pol, pr, &cost, &config)?])
                }
            })?;
            let rows: Vec<Vec<String>> = blocks.iter().flat_map(|b| sim_rows(b)).collect();
            let extra = [format!(
                "rows are grouped per grid point in grid order, {} per point",
                blocks[0].len()
            )];
            write_csv(
                header(spec, &points, &extra),
                &["policy", "mean", "std_err", "horizon", "seed"],
                &rows,
            )
        }
        Command::SweepThreshold => {
            let ps: Vec<f64> = parse_list("p", spec.p.as_deref().unwrap_or("0.5:0.001:0.999"))?;
            let ds: Vec<u32> = parse_list("d", spec.d.as_deref().unwrap_or("10,20,50"))?;
            let mut points = Vec::new();
            for &d in &ds {
                for &p in &ps {
                    points.push(ChannelParams::new(p, 1.0 - p, d)?);
                }
            }
            let rows = per_point(&points, |pr| {
                let r = solve_iid_with_eps(pr, spec.eps)?;
                let (threshold, divergent) = match r.argmin[0] {
                    Candidate::AlwaysCh1 => ("inf".to_string(), true),
                    _ => (r.policy.lambda0.to_string(), false),
                };
                Ok(vec![pr.d().to_string(), num(pr.p()), threshold, divergent.to_string()])
            })?;
            let extra = ["q = 1 - p; threshold is inf where Channel 2 is never used".to_string()];
            write_csv(header(spec, &points, &extra), &["d", "p", "threshold", "divergent"], &rows)
        }
        Command::SweepAge => {
            let qs: Vec<f64> = parse_list("q", spec.q.as_deref().unwrap_or("0.05:0.05:0.95"))?;
            let ds: Vec<u32> = parse_list("d", spec.d.as_deref().unwrap_or("20"))?;
            let ps: Option<Vec<f64>> = spec.p.as_deref().map(|raw| parse_list("p", raw)).transpose()?;
            let mut points = Vec::new();
            for &d in &ds {
                for &q in &qs {
                    match &ps {
                        Some(ps) => {
                            for &p in ps {
                                points.push(ChannelParams::new(p, q, d)?);
                            }
                        }
                        None => points.push(ChannelParams::new(balanced_p(q, d)?, q, d)?),
                    }
                }
            }
            let config = spec.sim_config();
            let opts = spec.oracle_options();
            let blocks = per_point(&points, |pr| compare_policies(pr, &cost, &config, &opts))?;
            let rows: Vec<Vec<String>> = points
                .iter()
                .zip(&blocks)
                .flat_map(|(pr, block)| {
                    sim_rows(block).into_iter().map(move |row| {
                        let mut full = vec![num(pr.p()), num(pr.q()), pr.d().to_string()];
                        full.extend(row);
                        full
                    })
                })
                .collect();
            let extra = [match spec.p {
                Some(_) => "p taken from --p".to_string(),
                None => "p chosen per (q, d) so that always-Channel-1 and always-Channel-2 ages coincide".to_string(),
            }];
            write_csv(
                header(spec, &points, &extra),
                &["p", "q", "d", "policy", "mean", "std_err", "horizon", "seed"],
                &rows,
            )
        }
    }
}

/// Run and deliver the CSV to `--out` or return it for stdout.
pub fn execute(spec: &RunSpec) -> Result<Option<String>> {
    let text = run(spec)?;
    match &spec.out {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}
