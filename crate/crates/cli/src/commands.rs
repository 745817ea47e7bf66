use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qsl_core::composite::{self, frame_adjusted_count};
use qsl_core::evolution::{self, OrthogonalitySearch, OverlapTrace, DEFAULT_DELTA};
use qsl_core::latticegas::LatticeGas;
use qsl_core::optimizer::{self, SearchConfig};
use qsl_core::report::{format_g17, to_json};
use qsl_core::sequences::{self, LadderWeights, DEFAULT_GRAM_CAP};
use qsl_core::PureState;

use crate::spec::{parse_spectrum, parse_state};
use crate::{sweep, CliError, Output};

#[derive(Debug, Parser)]
#[command(name = "qsl", version, about = "Orthogonality times and speed limits of quantum evolution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Energy, spread and cycle bounds plus the measured orthogonality time.
    Bounds(BoundsArgs),
    /// First time the survival amplitude drops to delta.
    FirstZero(FirstZeroArgs),
    /// Survival amplitude on a uniform time grid, as CSV.
    Trace(TraceArgs),
    /// Gram matrix of the evolved sequence.
    Gram(GramArgs),
    /// Exact-cycle test and energy floor for a ladder state.
    CycleCheck(CycleArgs),
    /// Log-log scaling of the interval-weighted corrections.
    Scaling(ScalingArgs),
    /// Product of independent subsystem states.
    Compose(ComposeArgs),
    /// Rest-frame bound 2(Et - px) on the number of orthogonal states.
    FrameCount(FrameArgs),
    /// Search for the fastest-orthogonalizing state at fixed energy.
    Optimize(OptimizeArgs),
    /// Single-speed lattice gas with a per-step change count.
    Latticegas(LatticeArgs),
    /// Run a subcommand over a parameter grid.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SearchFlags {
    /// Orthogonality threshold on |S(t)|.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    /// End of the search window; defaults to 50/(4E).
    #[arg(long)]
    pub tmax: Option<f64>,
}

impl SearchFlags {
    fn search(&self, state: &PureState) -> Result<OrthogonalitySearch, CliError> {
        let t_max = self
            .tmax
            .unwrap_or_else(|| OrthogonalitySearch::default_t_max(state.energy_stats().mean));
        Ok(OrthogonalitySearch::new(self.delta, t_max)?)
    }
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub state: String,
    /// Cycle length for the cycle and max-energy bounds.
    #[arg(long = "cycle-n")]
    pub cycle_n: Option<usize>,
    #[command(flatten)]
    pub search: SearchFlags,
}

#[derive(Debug, Args)]
pub struct FirstZeroArgs {
    #[arg(long)]
    pub state: String,
    #[command(flatten)]
    pub search: SearchFlags,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long)]
    pub state: String,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long, default_value_t = 1001)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct GramArgs {
    #[arg(long)]
    pub state: String,
    /// Time between consecutive states.
    #[arg(long)]
    pub step: f64,
    /// Number of states M; defaults to min(levels, 64).
    #[arg(long = "M")]
    pub count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CycleArgs {
    #[arg(long)]
    pub state: String,
    /// Cycle length.
    #[arg(long = "N")]
    pub n: usize,
    /// Ladder spacing; inferred from the levels when absent.
    #[arg(long)]
    pub eps1: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Quantity {
    /// |<psi_{m+k}|psi_m>| at offset k.
    Overlap,
    /// Sum of squared relative gaps.
    DeltaSq,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long)]
    pub c: f64,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub k: i64,
    #[arg(long = "N", value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Quantity::Overlap)]
    pub quantity: Quantity,
    /// Also write the `N,value` table here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    /// Repeat once per subsystem.
    #[arg(long = "state", required = true)]
    pub states: Vec<String>,
}

#[derive(Debug, Args)]
pub struct FrameArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub energy: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub time: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub momentum: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub displacement: f64,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Spectrum file or inline constructor.
    #[arg(long)]
    pub spectrum: String,
    #[arg(long)]
    pub energy: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, default_value_t = optimizer::DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long, env = "QSL_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = optimizer::DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Attach an independent recomputation of the result.
    #[arg(long)]
    pub certify: bool,
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    #[arg(long)]
    pub width: usize,
    #[arg(long)]
    pub height: usize,
    #[arg(long)]
    pub density: f64,
    #[arg(long)]
    pub steps: usize,
    #[arg(long, env = "QSL_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Rotate head-on pairs by 90 degrees before moving.
    #[arg(long)]
    pub collisions: bool,
    /// Per-step `step,changes,bound,utilization` table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON `{"subcommand": ..., "grid": {flag: [values]}, "fixed": {flag: value}}`.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

fn g(x: f64) -> String {
    format_g17(x)
}

fn json_output(value: &impl serde::Serialize) -> Result<Output, CliError> {
    Ok(Output {
        stdout: to_json(value)?,
        ..Output::default()
    })
}

pub fn run(command: Command) -> Result<Output, CliError> {
    match command {
        Command::Bounds(a) => bounds(a),
        Command::FirstZero(a) => first_zero(a),
        Command::Trace(a) => trace(a),
        Command::Gram(a) => gram(a),
        Command::CycleCheck(a) => cycle_check(a),
        Command::Scaling(a) => scaling(a),
        Command::Compose(a) => compose(a),
        Command::FrameCount(a) => json_output(&json!({
            "count": frame_adjusted_count(a.energy, a.time, a.momentum, a.displacement)
        })),
        Command::Optimize(a) => optimize(a),
        Command::Latticegas(a) => latticegas(a),
        Command::Sweep(a) => sweep::run(a),
    }
}

fn soundness_violation(report: &evolution::BoundReport, delta: f64) -> Option<String> {
    let (tau, bound) = (report.measured_tau?, report.strongest()?);
    let tol = evolution::approximate_tolerance(delta, bound);
    (tau < bound - tol).then(|| format!("measured tau {tau} below bound {bound}"))
}

fn bounds(a: BoundsArgs) -> Result<Output, CliError> {
    let state = parse_state(&a.state)?;
    let search = a.search.search(&state)?;
    let report = evolution::bounds(&state, a.cycle_n)?.with_measured(search.run(&state));
    let mut out = json_output(&report)?;
    out.violation = soundness_violation(&report, a.search.delta);
    Ok(out)
}

fn first_zero(a: FirstZeroArgs) -> Result<Output, CliError> {
    let state = parse_state(&a.state)?;
    let search = a.search.search(&state)?;
    let tau = search.run(&state);
    let report = evolution::bounds(&state, None)?.with_measured(tau);
    let mut out = json_output(&json!({
        "delta": search.delta(),
        "found": tau.is_some(),
        "ml_time": report.ml_time,
        "mt_time": report.mt_time,
        "t_max": search.t_max(),
        "tau": tau,
    }))?;
    out.violation = soundness_violation(&report, a.search.delta);
    Ok(out)
}

fn trace(a: TraceArgs) -> Result<Output, CliError> {
    let state = parse_state(&a.state)?;
    let t_max = a
        .tmax
        .unwrap_or_else(|| OrthogonalitySearch::default_t_max(state.energy_stats().mean));
    let tr = OverlapTrace::uniform(&state, t_max, a.points)?;
    let mut text = String::from("t,re,im,mag");
    for i in 0..tr.len() {
        text.push_str(&format!(
            "\n{},{},{},{}",
            g(tr.times[i]),
            g(tr.re[i]),
            g(tr.im[i]),
            g(tr.mag[i])
        ));
    }
    Ok(Output {
        stdout: text,
        ..Output::default()
    })
}

fn gram(a: GramArgs) -> Result<Output, CliError> {
    let state = parse_state(&a.state)?;
    let m = a
        .count
        .unwrap_or_else(|| state.spectrum().len().clamp(2, DEFAULT_GRAM_CAP));
    json_output(&sequences::gram(&state, a.step, m)?)
}

fn cycle_check(a: CycleArgs) -> Result<Output, CliError> {
    let state = parse_state(&a.state)?;
    let ladder = LadderWeights::from_state(&state, a.eps1)?;
    let check = sequences::exact_cycle_check(&ladder.weights, a.n)?;
    let step = 1.0 / (a.n as f64 * ladder.eps1);
    let gram = sequences::gram(&ladder.to_state()?, step, a.n.max(2))?;
    let floor = if check.is_cycle {
        Some(sequences::cycle_energy_floor(&ladder, a.n)?)
    } else {
        None
    };
    json_output(&json!({
        "check": check,
        "energy_floor": floor,
        "eps1": ladder.eps1,
        "gram_identity_deviation": gram.identity_deviation(),
        "step": step,
    }))
}

fn scaling(a: ScalingArgs) -> Result<Output, CliError> {
    let report = match a.quantity {
        Quantity::Overlap => sequences::residual_scaling(a.c, a.k, &a.n_list)?,
        Quantity::DeltaSq => sequences::delta_sq_scaling(a.c, &a.n_list)?,
    };
    let mut out = json_output(&report)?;
    if let Some(path) = a.csv {
        let mut text = String::from("N,value");
        for (n, v) in &report.samples {
            text.push_str(&format!("\n{n},{}", g(*v)));
        }
        text.push('\n');
        out.files.push((path, text));
    }
    Ok(out)
}

fn compose(a: ComposeArgs) -> Result<Output, CliError> {
    let parts = a
        .states
        .iter()
        .map(|s| parse_state(s))
        .collect::<Result<Vec<_>, _>>()?;
    let product = composite::compose(parts)?;
    json_output(&json!({
        "combined": product.combined,
        "combined_mean": product.combined.energy_stats().mean,
        "part_means": product.parts.iter().map(|p| p.energy_stats().mean).collect::<Vec<_>>(),
        "part_rate_bounds": product.part_rate_bounds(),
        "rate_bound": product.rate_bound(),
    }))
}

fn optimize(a: OptimizeArgs) -> Result<Output, CliError> {
    let spectrum = parse_spectrum(&a.spectrum)?;
    let config = SearchConfig {
        delta: a.delta,
        budget: a.budget,
        seed: a.seed,
        restarts: a.restarts,
        t_max: a.tmax,
    };
    let result = optimizer::minimize_tau(&spectrum, a.energy, &config)?;
    let mut value = serde_json::to_value(&result)?;
    if a.certify {
        value["certificate"] = serde_json::to_value(optimizer::certify(&result)?)?;
    }
    let mut out = json_output(&value)?;
    if !result.respects_bound() {
        out.violation = Some(format!(
            "best_tau {:?} below 1/(4E) = {}",
            result.best_tau, result.bound_tau
        ));
    }
    Ok(out)
}

fn latticegas(a: LatticeArgs) -> Result<Output, CliError> {
    let mut gas = LatticeGas::init_random(a.width, a.height, a.density, a.seed)?;
    let mut table = a.csv.as_ref().map(|_| String::from("step,changes,bound,utilization"));
    let summary = gas.run(a.steps, a.collisions, |i, r| {
        if let Some(t) = table.as_mut() {
            t.push_str(&format!("\n{i},{},{},{}", r.changes, r.bound, g(r.utilization)));
        }
    })?;
    let mut out = json_output(&summary)?;
    if let (Some(path), Some(mut text)) = (a.csv, table) {
        text.push('\n');
        out.files.push((path, text));
    }
    if !summary.bound_held || !summary.conserved {
        out.violation = Some(format!(
            "bound_held = {}, conserved = {}",
            summary.bound_held, summary.conserved
        ));
    }
    Ok(out)
}
