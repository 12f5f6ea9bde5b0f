//! Command-line front end: single runs, cost sweeps, Monte Carlo
//! correctness checks, and captime verification.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use utiliconf::distributions::RuntimeDistribution;
use utiliconf::error::{Error, Result};
use utiliconf::execution::{Executor, RunSource};
use utiliconf::harness::{self, OutputFormat, SyntheticSpec};
use utiliconf::procedures::{
    run_adaptive, run_fixed, run_oracle, ProcedureKind, ProcedureReport, StopConfig,
};
use utiliconf::utility::UtilityFunction;
use utiliconf::verification::{run_verification, SkepticOutcome};

#[derive(Parser)]
#[command(
    name = "utiliconf",
    version,
    about = "Utility-aware algorithm configuration with capped runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one selection procedure once and report the winner.
    Run(RunArgs),
    /// Fixed-captime total cost over a grid of captimes.
    SweepCaptime(SweepCaptimeArgs),
    /// Total cost to reach each guarantee, per procedure.
    SweepEpsilon(SweepEpsilonArgs),
    /// Fraction of trials whose returned arm is truly eps-optimal.
    Montecarlo(MontecarloArgs),
    /// Prover-skeptic captime verification with adversarial witnesses.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SourceArgs {
    /// Runtime matrix CSV (header: instance,<name>,...)
    #[arg(long, value_name = "CSV", conflicts_with = "synthetic")]
    dataset: Option<PathBuf>,
    /// Synthetic family JSON (defaults to the bundled five-arm family)
    #[arg(long, value_name = "JSON")]
    synthetic: Option<PathBuf>,
}

#[derive(Args)]
struct OutputArgs {
    /// Directory for the report file (omit to print the report to stdout)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Report format: csv, json, or svg
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Selection procedure: up, naive, or oracle
    #[arg(long, default_value = "up")]
    procedure: String,
    /// Utility spec: loglaplace:<t0>,<sigma> | uniform:<t0> | table:<path.csv>
    #[arg(long, default_value = "loglaplace:60,1")]
    utility: String,
    /// Failure probability delta
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Target suboptimality (naive only)
    #[arg(long)]
    epsilon: Option<f64>,
    /// Captime in seconds (naive only)
    #[arg(long)]
    captime: Option<f64>,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stop after this many runs per arm
    #[arg(long)]
    max_m: Option<usize>,
    /// Stop once total simulated time reaches this budget
    #[arg(long)]
    budget_seconds: Option<f64>,
    /// Do not charge the oracle's uncapped runs to the ledger
    #[arg(long)]
    free_oracle: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepCaptimeArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value = "loglaplace:60,1")]
    utility: String,
    /// Target suboptimality grid (comma-separated)
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    epsilon: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Captime grid in seconds (comma-separated)
    #[arg(long, value_delimiter = ',', required = true)]
    captime: Vec<f64>,
    /// Trials per grid point
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepEpsilonArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value = "loglaplace:60,1")]
    utility: String,
    /// Target suboptimality grid (comma-separated)
    #[arg(long, value_delimiter = ',', required = true)]
    epsilon: Vec<f64>,
    /// Failure probability grid (comma-separated)
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    delta: Vec<f64>,
    /// Procedures to compare (comma-separated: up, naive, oracle)
    #[arg(long, value_delimiter = ',', default_value = "up,naive")]
    procedure: Vec<String>,
    /// Captime for the naive procedure
    #[arg(long)]
    captime: Option<f64>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Do not charge the oracle's uncapped runs to the ledger
    #[arg(long)]
    free_oracle: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct MontecarloArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value = "up")]
    procedure: String,
    #[arg(long, default_value = "loglaplace:60,1")]
    utility: String,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Captime in seconds (naive only)
    #[arg(long)]
    captime: Option<f64>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value = "loglaplace:60,1")]
    utility: String,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Captime override, one value per arm (comma-separated); omit to use
    /// the sufficient captimes
    #[arg(long, value_delimiter = ',')]
    captime: Option<Vec<f64>>,
    /// Write the adversarial witness family (refutations only) to this path
    #[arg(long, value_name = "JSON")]
    emit_witness: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

enum LoadedSource {
    Synthetic {
        names: Vec<String>,
        dists: Vec<RuntimeDistribution>,
    },
    Matrix {
        names: Vec<String>,
        runtimes: Vec<Vec<f64>>,
    },
}

fn load_source(args: &SourceArgs) -> Result<LoadedSource> {
    if let Some(path) = &args.dataset {
        let (names, runtimes) = harness::load_matrix_csv(path)?;
        return Ok(LoadedSource::Matrix { names, runtimes });
    }
    let (names, dists) = match &args.synthetic {
        Some(path) => harness::parse_synthetic(&std::fs::read_to_string(path)?)?,
        None => harness::default_family(),
    };
    Ok(LoadedSource::Synthetic { names, dists })
}

fn synthetic_only(
    args: &SourceArgs,
    what: &str,
) -> Result<(Vec<String>, Vec<RuntimeDistribution>)> {
    match load_source(args)? {
        LoadedSource::Synthetic { names, dists } => Ok((names, dists)),
        LoadedSource::Matrix { .. } => Err(Error::InvalidInput(format!(
            "{what} needs analytic distributions; pass --synthetic instead of --dataset"
        ))),
    }
}

fn emit(payload: &str, out: &Option<PathBuf>, stem: &str, format: OutputFormat) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let ext = match format {
                OutputFormat::Csv => "csv",
                OutputFormat::Json => "json",
                OutputFormat::Svg => "svg",
            };
            let path = dir.join(format!("{stem}.{ext}"));
            std::fs::write(&path, payload)?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            print!("{payload}");
            if !payload.ends_with('\n') {
                println!();
            }
        }
    }
    Ok(())
}

fn summarize_run(report: &ProcedureReport) {
    eprintln!(
        "{}: winner {} ({}), {} rounds, eps_hat {:.6}, total simulated time {:.3}s, {:?}",
        report.procedure,
        report.winner,
        report.winner_name,
        report.rounds,
        report.eps_hat,
        report.total_cost,
        report.termination,
    );
    for arm in &report.arms {
        let status = match arm.eliminated_at {
            Some(m) => format!("eliminated at m={m}"),
            None => "survived".to_string(),
        };
        eprintln!(
            "  {}: cap {:.3}s, {} runs, u_hat {:.4}, f_hat {:.4}, {}",
            arm.name, arm.final_cap, arm.runs, arm.u_hat, arm.f_hat, status
        );
    }
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let format = OutputFormat::parse(&a.output.format)?;
    let u = UtilityFunction::from_spec(&a.utility)?;
    let kind = ProcedureKind::parse(&a.procedure)?;
    let mut exec = match load_source(&a.source)? {
        LoadedSource::Synthetic { names, dists } => {
            Executor::new(RunSource::synthetic(dists, names, a.seed, 0)?)
        }
        LoadedSource::Matrix { names, runtimes } => {
            Executor::new(RunSource::matrix(runtimes, names, a.seed, 0)?)
        }
    };
    let stop = StopConfig {
        max_m: a.max_m.unwrap_or_else(|| StopConfig::default().max_m),
        budget: a.budget_seconds,
    };
    let report = match kind {
        ProcedureKind::Adaptive => run_adaptive(&mut exec, &u, a.delta, &stop, None)?,
        ProcedureKind::Fixed => {
            let eps = a.epsilon.ok_or_else(|| {
                Error::InvalidInput("the naive procedure needs --epsilon".into())
            })?;
            let kappa = a.captime.ok_or_else(|| {
                Error::InvalidInput("the naive procedure needs --captime".into())
            })?;
            run_fixed(&mut exec, &u, eps, a.delta, kappa, None)?
        }
        ProcedureKind::Oracle => {
            run_oracle(&mut exec, &u, a.delta, &stop, a.free_oracle, None)?
        }
    };
    summarize_run(&report);
    emit(
        &harness::emit_run(&report, format)?,
        &a.output.out,
        "run",
        format,
    )
}

fn cmd_sweep_captime(a: SweepCaptimeArgs) -> Result<()> {
    let format = OutputFormat::parse(&a.output.format)?;
    let u = UtilityFunction::from_spec(&a.utility)?;
    let (names, dists) = synthetic_only(&a.source, "sweep-captime")?;
    let rows = harness::sweep_captime(
        &dists, &names, &u, &a.epsilon, a.delta, &a.captime, a.trials, a.seed,
    )?;
    let finite = rows.iter().filter(|r| r.total_time.is_finite()).count();
    eprintln!(
        "sweep-captime: {} rows ({} feasible) over {} captimes",
        rows.len(),
        finite,
        a.captime.len()
    );
    emit(
        &harness::emit_captime(&rows, format)?,
        &a.output.out,
        "sweep-captime",
        format,
    )
}

fn cmd_sweep_epsilon(a: SweepEpsilonArgs) -> Result<()> {
    let format = OutputFormat::parse(&a.output.format)?;
    let u = UtilityFunction::from_spec(&a.utility)?;
    let (names, dists) = synthetic_only(&a.source, "sweep-epsilon")?;
    let procedures: Vec<ProcedureKind> = a
        .procedure
        .iter()
        .map(|s| ProcedureKind::parse(s))
        .collect::<Result<_>>()?;
    let kappa_fixed = if procedures.contains(&ProcedureKind::Fixed) {
        a.captime.ok_or_else(|| {
            Error::InvalidInput("comparing against naive needs --captime".into())
        })?
    } else {
        a.captime.unwrap_or(f64::NAN)
    };
    let rows = harness::sweep_epsilon(
        &dists,
        &names,
        &u,
        &a.epsilon,
        &a.delta,
        kappa_fixed,
        &procedures,
        a.trials,
        a.seed,
        a.free_oracle,
    )?;
    eprintln!(
        "sweep-epsilon: {} rows over {} procedures x {} deltas x {} epsilons x {} trials",
        rows.len(),
        procedures.len(),
        a.delta.len(),
        a.epsilon.len(),
        a.trials
    );
    emit(
        &harness::emit_epsilon(&rows, format)?,
        &a.output.out,
        "sweep-epsilon",
        format,
    )
}

fn cmd_montecarlo(a: MontecarloArgs) -> Result<()> {
    let format = OutputFormat::parse(&a.output.format)?;
    let u = UtilityFunction::from_spec(&a.utility)?;
    let kind = ProcedureKind::parse(&a.procedure)?;
    let (names, dists) = synthetic_only(&a.source, "montecarlo")?;
    let report = harness::montecarlo_correctness(
        &dists, &names, &u, kind, a.epsilon, a.delta, a.trials, a.seed, a.captime,
    )?;
    eprintln!(
        "montecarlo: {}/{} trials returned an eps-optimal arm (rate {:.3}, Wilson 95% [{:.3}, {:.3}])",
        report.successes, report.trials, report.rate, report.wilson_low, report.wilson_high
    );
    emit(
        &harness::emit_correctness(&report, format)?,
        &a.output.out,
        "montecarlo",
        format,
    )
}

fn cmd_verify(a: VerifyArgs) -> Result<()> {
    let format = OutputFormat::parse(&a.output.format)?;
    if format != OutputFormat::Json {
        return Err(Error::InvalidInput(
            "verify reports are JSON only; drop --format or pass json".into(),
        ));
    }
    let u = UtilityFunction::from_spec(&a.utility)?;
    let (names, dists) = synthetic_only(&a.source, "verify")?;
    let report = run_verification(&dists, &names, &u, a.epsilon, a.captime.clone())?;

    for arm in &report.arms {
        eprintln!(
            "  {}: captime {:.6}s, bounds [{:.6}, {:.6}]",
            arm.name, arm.captime, arm.lower, arm.upper
        );
    }
    match &report.outcome {
        SkepticOutcome::Certified { winner } => {
            eprintln!(
                "certified: {} is {}-optimal under these captimes",
                report.arms[*winner].name, report.epsilon
            );
        }
        SkepticOutcome::Refuted {
            incumbent,
            challenger,
            gap,
        } => {
            eprintln!(
                "refuted: {} could still beat {} (slack {:.6} beyond eps)",
                report.arms[*challenger].name, report.arms[*incumbent].name, gap
            );
        }
    }

    if let Some(path) = &a.emit_witness {
        match &report.witness {
            Some(w) => {
                let family = SyntheticSpec {
                    algorithms: names
                        .iter()
                        .zip(&w.distributions)
                        .map(|(name, spec)| harness::AlgorithmSpec {
                            name: name.clone(),
                            distribution: spec.clone(),
                        })
                        .collect(),
                };
                std::fs::write(path, format!("{}\n", serde_json::to_string_pretty(&family)?))?;
                eprintln!("wrote witness family to {}", path.display());
            }
            None => eprintln!("no witness to emit: the configuration was certified"),
        }
    }

    let payload = format!("{}\n", serde_json::to_string_pretty(&report)?);
    emit(&payload, &a.output.out, "verify", format)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::SweepCaptime(a) => cmd_sweep_captime(a),
        Command::SweepEpsilon(a) => cmd_sweep_epsilon(a),
        Command::Montecarlo(a) => cmd_montecarlo(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Infeasible(msg)) => {
            eprintln!("infeasible: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
