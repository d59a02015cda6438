mod failure;
mod output;

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use dnastore::bounds::{critical_beta, critical_beta_uniform, prior_critical_beta_bsc, BoundsEvaluator};
use dnastore::optimize::OptimizerConfig;
use dnastore::reliability::ReliabilityEvaluator;
use dnastore::sim::{simulate, SimulationSpec};
use dnastore::symmetry::{check_extension_symmetry, symmetry_report, DEFAULT_COLUMN_CAP};
use dnastore::{make_bsc, ChannelMatrix, Distribution, Dmc};

use failure::Failure;
use output::{emit, Csv};

/// Capacity bounds, error exponents, symmetry checks and simulation for the
/// DNA storage channel. All rates are in nats per symbol.
#[derive(Parser)]
#[command(name = "dnastore", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "DNASTORE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity lower and upper bounds over a range of beta (CSV).
    Bounds(BoundsArgs),
    /// Reliability-function lower bound over a range of rates (CSV).
    Reliability(ReliabilityArgs),
    /// Critical beta above which the bounds coincide (CSV).
    CriticalBeta(CriticalArgs),
    /// Gallager-symmetry report of a channel or its extension (JSON).
    Symmetry(SymmetryArgs),
    /// Monte Carlo error rate of a random code under the universal decoder (JSON).
    Simulate(SimulateArgs),
    /// Regenerates the data behind a figure (CSV).
    Repro(ReproArgs),
}

#[derive(Args)]
struct OptArgs {
    /// Simplex grid resolution for the input-law search.
    #[arg(long, default_value_t = 10)]
    grid_resolution: usize,
    /// Write here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Channel file, JSON `{"rows": [[...], ...]}`.
    #[arg(long)]
    channel: PathBuf,
    #[arg(long)]
    alpha: f64,
    /// Single beta; overrides the range.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    beta_min: Option<f64>,
    #[arg(long)]
    beta_max: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    beta_step: f64,
    #[arg(long, default_value_t = 20)]
    dbar: usize,
    /// Report the upper bound even when the channel has a zero entry.
    #[arg(long)]
    allow_unproven_ub: bool,
    #[command(flatten)]
    opt: OptArgs,
}

#[derive(Args)]
struct ReliabilityArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long)]
    alpha: f64,
    /// One or more betas, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    beta: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    dbar: usize,
    #[arg(long, default_value_t = 0.0)]
    rate_min: f64,
    /// Defaults to the capacity lower bound at each beta.
    #[arg(long)]
    rate_max: Option<f64>,
    /// Number of rate intervals.
    #[arg(long, default_value_t = 40)]
    rate_steps: usize,
    /// Fix the input law to uniform instead of maximizing over it.
    #[arg(long)]
    uniform: bool,
    #[command(flatten)]
    opt: OptArgs,
}

#[derive(Args)]
struct CriticalArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 20)]
    dbar: usize,
    /// Closed form 2 / CID(uniform) for modulo-additive channels.
    #[arg(long)]
    uniform: bool,
    #[command(flatten)]
    opt: OptArgs,
}

#[derive(Args)]
struct SymmetryArgs {
    #[arg(long)]
    channel: PathBuf,
    /// Report on the merged extension of this order.
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// Output columns beyond which the search is declared undecided.
    #[arg(long, default_value_t = DEFAULT_COLUMN_CAP)]
    column_cap: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    /// Molecules per codeword.
    #[arg(long = "M")]
    m: usize,
    #[arg(long)]
    rate: f64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    dbar: usize,
    #[arg(long, default_value_t = 1_000_000)]
    enumeration_cap: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    /// Critical beta of the BSC against the earlier threshold.
    Fig2,
    /// Bounds of the example channel W0 over beta.
    Fig4,
    /// Reliability curves of W0 at several betas.
    Fig5,
}

#[derive(Args)]
struct ReproArgs {
    figure: Figure,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn load_channel(path: &Path) -> Result<Dmc, Failure> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::Input)?;
    Dmc::from_json(&text)
        .map_err(|e| Failure::Input(anyhow::Error::new(e).context(format!("parsing {}", path.display()))))
}

fn optimizer(grid_resolution: usize) -> OptimizerConfig {
    OptimizerConfig { grid_resolution, ..OptimizerConfig::default() }
}

/// `lo, lo + step, ...` up to `hi` inclusive, with steps counted rather than accumulated.
fn sweep(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(lo.is_finite() && hi.is_finite() && step > 0.0 && lo <= hi) {
        return Err(Failure::input(format!("range [{lo}, {hi}] with step {step} is not well ordered")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + step * k as f64).collect())
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}{i}"))
}

fn bounds_table(
    w: &Dmc,
    alpha: f64,
    dbar: usize,
    betas: &[f64],
    cfg: OptimizerConfig,
    allow_unproven: bool,
) -> Result<String, Failure> {
    let ev = BoundsEvaluator::new(w, alpha, dbar, cfg, true)?;
    let rows = betas
        .par_iter()
        .map(|&b| {
            let lb = ev.lower_bound(b)?;
            let ub = ev.upper_bound(b, allow_unproven)?;
            let mut row = vec![b, lb.value, ub.value];
            row.extend(lb.argmax_px.probs());
            row.extend(ub.argmax_px.probs());
            row.push(ub.truncation_error);
            Ok(row)
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let nx = w.num_inputs();
    let mut header: Vec<String> = ["beta", "lb", "ub"].iter().map(|s| s.to_string()).collect();
    header.extend(indexed("lb_px_", nx));
    header.extend(indexed("ub_px_", nx));
    header.push("trunc_err".into());
    let mut csv = Csv::new(&header);
    rows.iter().for_each(|r| csv.row(r));
    Ok(csv.into_string())
}

fn run_bounds(a: &BoundsArgs) -> Result<(), Failure> {
    let w = load_channel(&a.channel)?;
    let betas = match (a.beta, a.beta_min, a.beta_max) {
        (Some(b), _, _) => vec![b],
        (None, Some(lo), Some(hi)) => sweep(lo, hi, a.beta_step)?,
        _ => return Err(Failure::input("give --beta or both --beta-min and --beta-max")),
    };
    let text = bounds_table(&w, a.alpha, a.dbar, &betas, optimizer(a.opt.grid_resolution), a.allow_unproven_ub)?;
    emit(&text, a.opt.output.as_deref())
}

#[derive(Clone, Copy)]
struct RateGrid {
    min: f64,
    /// Defaults to the lower bound at each beta.
    max: Option<f64>,
    /// Number of intervals.
    steps: usize,
}

/// Exponent rows `R, E, beta, theta_0..theta_dbar` for each beta, rates from
/// `rate_min` to `rate_max` (default: the lower bound at that beta).
fn reliability_table(
    w: &Dmc,
    alpha: f64,
    dbar: usize,
    betas: &[f64],
    rates: RateGrid,
    uniform: bool,
    cfg: OptimizerConfig,
) -> Result<String, Failure> {
    let RateGrid { min: rate_min, max: rate_max, steps } = rates;
    if steps == 0 {
        return Err(Failure::input("--rate-steps must be positive"));
    }
    let ev = ReliabilityEvaluator::new(w, alpha, dbar)?;
    let bev = BoundsEvaluator::new(w, alpha, dbar, cfg, false)?;
    let px = Distribution::uniform(w.num_inputs());
    let mut points = Vec::new();
    for &beta in betas {
        let top = match rate_max {
            Some(r) => r,
            None if uniform => bev.lb_objective(&px, beta)?.max(0.0),
            None => bev.lower_bound(beta)?.value,
        };
        if !(top >= rate_min && rate_min >= 0.0) {
            return Err(Failure::input(format!("rate range [{rate_min}, {top}] at beta {beta} is not well ordered")));
        }
        points.extend((0..=steps).map(|k| (beta, rate_min + (top - rate_min) * k as f64 / steps as f64)));
    }
    let rows = points
        .par_iter()
        .map(|&(beta, r)| {
            let (exponent, theta) = if uniform {
                let s = ev.at(r, beta, &px)?;
                (s.exponent, s.theta)
            } else {
                let s = ev.maximize(r, beta, &cfg)?;
                (s.exponent, s.inner.theta)
            };
            let mut row = vec![r, exponent, beta];
            row.extend(theta.values());
            Ok(row)
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let mut header: Vec<String> = ["R", "exponent", "beta"].iter().map(|s| s.to_string()).collect();
    header.extend(indexed("theta_", dbar + 1));
    let mut csv = Csv::new(&header);
    rows.iter().for_each(|r| csv.row(r));
    Ok(csv.into_string())
}

fn run_reliability(a: &ReliabilityArgs) -> Result<(), Failure> {
    let w = load_channel(&a.channel)?;
    let cfg = optimizer(a.opt.grid_resolution);
    let text = reliability_table(
        &w,
        a.alpha,
        a.dbar,
        &a.beta,
        RateGrid { min: a.rate_min, max: a.rate_max, steps: a.rate_steps },
        a.uniform,
        cfg,
    )?;
    emit(&text, a.opt.output.as_deref())
}

fn run_critical(a: &CriticalArgs) -> Result<(), Failure> {
    let w = load_channel(&a.channel)?;
    let beta = if a.uniform {
        critical_beta_uniform(a.alpha, &w)?
    } else {
        critical_beta(a.alpha, &w, a.dbar, &optimizer(a.opt.grid_resolution))?
    };
    let mut csv = Csv::new(&["alpha".into(), "beta_cr".into()]);
    csv.row(&[a.alpha, beta]);
    emit(&csv.into_string(), a.opt.output.as_deref())
}

fn run_symmetry(a: &SymmetryArgs) -> Result<(), Failure> {
    let w = load_channel(&a.channel)?;
    let report = match a.order {
        0 => return Err(Failure::input("--order must be at least 1")),
        1 => symmetry_report(&w, a.column_cap)?,
        d => check_extension_symmetry(&w, d, a.column_cap)?,
    };
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Numeric(e.into()))?;
    text.push('\n');
    emit(&text, a.output.as_deref())
}

fn run_simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let w = load_channel(&a.channel)?;
    let spec = SimulationSpec {
        alpha: a.alpha,
        beta: a.beta,
        m: a.m,
        rate: a.rate,
        trials: a.trials,
        seed: a.seed,
        dbar: a.dbar,
        enumeration_cap: a.enumeration_cap,
    };
    let est = simulate(&w, &spec)?;
    let json = serde_json::json!({
        "error_rate": est.error_rate,
        "ci_low": est.ci_low,
        "ci_high": est.ci_high,
        "trials": est.trials,
        "seed": est.seed,
    });
    emit(&format!("{json}\n"), a.output.as_deref())
}

fn w0() -> Dmc {
    let rows = [[94., 2., 2., 2.], [2., 70., 25., 3.], [3., 2., 85., 10.], [10., 5., 5., 80.]];
    Dmc::new(rows.iter().map(|r| r.iter().map(|v| v / 100.0).collect()).collect()).expect("W0 is a valid channel")
}

fn run_repro(a: &ReproArgs) -> Result<(), Failure> {
    let text = match a.figure {
        Figure::Fig2 => {
            let mut csv = Csv::new(&["w", "beta_cr_unif", "beta_bar", "ratio"].map(String::from));
            // w in (0, 1/8); the earlier threshold diverges at 1/8.
            for k in 1..50 {
                let wp = 0.0025 * k as f64;
                let unif = critical_beta_uniform(1.0, &make_bsc(wp)?)?;
                let bar = prior_critical_beta_bsc(wp)?;
                csv.row(&[wp, unif, bar, bar / unif]);
            }
            csv.into_string()
        }
        Figure::Fig4 => bounds_table(&w0(), 5.0, 20, &sweep(1.0, 6.0, 0.1)?, OptimizerConfig::default(), false)?,
        Figure::Fig5 => {
            let rates = RateGrid { min: 0.0, max: None, steps: 40 };
            reliability_table(&w0(), 5.0, 10, &[2.0, 3.0, 4.0, 5.0], rates, true, OptimizerConfig::default())?
        }
    };
    emit(&text, a.output.as_deref())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")
            .map_err(Failure::Input)?;
    }
    match &cli.command {
        Command::Bounds(a) => run_bounds(a),
        Command::Reliability(a) => run_reliability(a),
        Command::CriticalBeta(a) => run_critical(a),
        Command::Symmetry(a) => run_symmetry(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Repro(a) => run_repro(a),
    }
}

fn main() {
    if let Err(f) = run(Cli::parse()) {
        eprintln!("error: {:#}", f.error());
        std::process::exit(f.exit_code());
    }
}
