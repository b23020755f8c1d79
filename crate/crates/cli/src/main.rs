//! `qbc`: run commitment protocols, sweep security parameters, check the
//! invariant suites and plan QBC2 instances.
//!
//! Exit codes: 0 success (a protocol run that ends in a clean reject also
//! counts), 1 suite failure or internal error, 2 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use qbc::analysis::{p1_max_search, qbc2_planner, reports_to_csv, us_ip_sweep, SweepFamily};
use qbc::ground_truth::{self, GroundTruth};
use qbc::protocols::qbc2::{qbc2_detection_matrix, qbc2_optimal_detector, PA_MAX_ITER, PA_TOL};
use qbc::protocols::{run_protocol, AdamStrategy, BabeStrategy, ProtocolId, ProtocolParams};
use qbc::verify::{self, VerifyOptions};
use qbc::Error;

#[derive(Parser)]
#[command(name = "qbc", version, about = "Quantum bit-commitment simulation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one commitment and print its transcript as JSON lines.
    Run(RunArgs),
    /// Evaluate concealment and binding over a grid and fit decay rates.
    Sweep(SweepArgs),
    /// Run the invariant suites.
    Verify(VerifyArgs),
    /// Plan (m, n, N) for a QBC2 security target.
    Plan(PlanArgs),
    /// Compute p_A, the optimal permutation-detection probability.
    Pa(PaArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with `params` and optional `adam`/`babe`; flags given on
    /// the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    overlap: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long = "N")]
    big_n: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    separation: Option<f64>,
    /// QBC3: a measured qubit whose projector matches the announcement must
    /// have passed.
    #[arg(long)]
    literal_rule: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Committer strategy, e.g. `honest`, `qubit-lie:2`, `uhlmann-matched`.
    #[arg(long)]
    adam: Option<String>,
    /// Receiver cheat, e.g. `angle=0.3927` or `angle=0.3927,sets=3`.
    #[arg(long)]
    babe_cheat: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    params: ProtocolParams,
    #[serde(default)]
    adam: Option<AdamStrategy>,
    #[serde(default)]
    babe: Option<BabeStrategy>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct SweepArgs {
    /// `qbc0` (grid over n) or `qbc2` (grid over m).
    #[arg(long)]
    protocol: String,
    /// `a..b` (inclusive) or a comma-separated list.
    #[arg(long)]
    grid: String,
    /// QBC0 pair overlap.
    #[arg(long)]
    overlap: Option<f64>,
    /// QBC2: estimate p_A^m by sampling the optimal detector.
    #[arg(long)]
    monte_carlo: bool,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite to run (repeatable); all suites by default.
    #[arg(long = "suite")]
    suites: Vec<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Print the report as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Defaults to the pinned ground truth.
    #[arg(long)]
    p_a: Option<f64>,
    /// Defaults to the pinned ground truth at the pinned epsilon, and to a
    /// fresh search otherwise.
    #[arg(long)]
    p1_bar: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PaArgs {
    #[arg(long, default_value_t = PA_TOL)]
    tol: f64,
    #[arg(long, default_value_t = PA_MAX_ITER)]
    max_iter: usize,
    /// Recompute every ground-truth constant and write the file here.
    #[arg(long)]
    write: Option<PathBuf>,
    /// Security target used for the ground-truth file.
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
}

enum Failure {
    Usage(String),
    Suite,
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::TooLarge { .. }
            | Error::Infeasible(_)
            | Error::Json(_)
            | Error::FrameConditioning(_)
            | Error::InvalidPrior(_) => Failure::Usage(e.to_string()),
            other => Failure::Internal(other.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Internal(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| Failure::Internal(e.to_string()))
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let (mut params, mut adam, mut babe) = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let c: RunConfig = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            (Some(c.params), c.adam, c.babe)
        }
        None => (None, None, None),
    };
    if let Some(name) = &a.protocol {
        let id: ProtocolId = name.parse().map_err(|e: Error| usage(e.to_string()))?;
        let n = a.n.or(params.as_ref().map(|p| p.n)).ok_or_else(|| usage("--n is required"))?;
        params = Some(ProtocolParams::new(id, n, 0));
    }
    let mut p = params.ok_or_else(|| usage("--protocol or --config is required"))?;
    if let Some(n) = a.n {
        p.n = n;
    }
    p.overlap = a.overlap.or(p.overlap);
    p.m = a.m.or(p.m);
    p.big_n = a.big_n.or(p.big_n);
    p.eta = a.eta.or(p.eta);
    p.separation = a.separation.or(p.separation);
    if a.literal_rule {
        p.literal_rule = Some(true);
    }
    if let Some(s) = a.seed {
        p.seed = s;
    } else if a.config.is_none() {
        return Err(usage("--seed is required"));
    }
    if let Some(s) = &a.adam {
        adam = Some(s.parse().map_err(|e: Error| usage(e.to_string()))?);
    }
    if let Some(s) = &a.babe_cheat {
        babe = Some(s.parse().map_err(|e: Error| usage(e.to_string()))?);
    }
    let t = run_protocol(&p, &adam.unwrap_or(AdamStrategy::Honest), &babe.unwrap_or(BabeStrategy::Honest))?;
    let text = t.to_json_lines()? + &t.verdict_line()? + "\n";
    emit(a.output.as_deref(), &text)
}

fn parse_grid(s: &str) -> Result<Vec<usize>, Failure> {
    let bad = || usage(format!("bad grid '{s}': expected a..b or a,b,c"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        Ok((a..=b).collect())
    } else {
        s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
    }
}

fn cmd_sweep(a: SweepArgs) -> Result<(), Failure> {
    let grid = parse_grid(&a.grid)?;
    let id: ProtocolId = a.protocol.parse().map_err(|e: Error| usage(e.to_string()))?;
    let family = match id {
        ProtocolId::Qbc0 => {
            let o = a.overlap.ok_or_else(|| usage("qbc0 sweep needs --overlap"))?;
            if !(0.0..1.0).contains(&o) {
                return Err(usage(format!("overlap {o} outside [0, 1)")));
            }
            SweepFamily::Qbc0 { overlap: o }
        }
        ProtocolId::Qbc2 if a.monte_carlo => SweepFamily::Qbc2MonteCarlo {
            detection: qbc2_detection_matrix(qbc2_optimal_detector())?,
            trials: a.trials,
            seed: a.seed,
        },
        ProtocolId::Qbc2 => SweepFamily::Qbc2 { p_a: ground_truth::pinned().p_a.value },
        other => return Err(usage(format!("sweeps are available for qbc0 and qbc2, not {other}"))),
    };
    let out = us_ip_sweep(&family, &grid);
    for (x, e) in &out.errors {
        eprintln!("grid point {x}: {e}");
    }
    let text = match a.format {
        Format::Csv => reports_to_csv(&out.rows)?,
        Format::Json => to_json(&out)?,
    };
    emit(a.output.as_deref(), &text)
}

fn cmd_verify(a: VerifyArgs) -> Result<(), Failure> {
    let opts = VerifyOptions { suites: a.suites, trials: a.trials, n: a.n };
    let report = verify::run(&opts)?;
    if a.json {
        emit(None, &to_json(&report)?)?;
    } else {
        emit(None, &report.render())?;
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Suite)
    }
}

fn cmd_plan(a: PlanArgs) -> Result<(), Failure> {
    let gt = ground_truth::pinned();
    let p_a = a.p_a.unwrap_or(gt.p_a.value);
    let p1_bar = match a.p1_bar {
        Some(v) => v,
        None if a.epsilon == gt.epsilon && p_a == gt.p_a.value => gt.p1.value,
        None => {
            let m = qbc2_planner(a.epsilon, p_a, 0.5)?.m;
            p1_max_search(m as usize, a.epsilon)?.value
        }
    };
    let r = qbc2_planner(a.epsilon, p_a, p1_bar)?;
    emit(a.output.as_deref(), &to_json(&r)?)
}

fn cmd_pa(a: PaArgs) -> Result<(), Failure> {
    match &a.write {
        Some(path) => {
            let gt: GroundTruth = ground_truth::compute(a.epsilon, a.tol, a.max_iter)?;
            emit(Some(path), &gt.to_json()?)?;
            emit(None, &to_json(&gt.p_a)?)
        }
        None => emit(None, &to_json(&ground_truth::compute_pa(a.tol, a.max_iter)?)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Pa(a) => cmd_pa(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Suite) => ExitCode::from(1),
        Err(Failure::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
