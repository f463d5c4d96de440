//! Command-line front end for the experiment harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swarmfl::experiments::{self, emit_csv, trace_records};
use swarmfl::saa::SolverConfig;
use swarmfl::{DesignVector, Error, SwarmScenario};

#[derive(Parser)]
#[command(
    name = "swarmfl",
    version,
    about = "Federated learning over a UAV swarm"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path.
    #[arg(long, default_value = "out.csv")]
    out: PathBuf,
    /// Overrides the number of Monte Carlo training runs.
    #[arg(long)]
    mc_runs: Option<usize>,
    /// Overrides the number of frozen channel samples in the optimizer.
    #[arg(long)]
    samples_k: Option<usize>,
}

#[derive(Args)]
struct DesignArg {
    /// Design JSON (`p`, `p_leader`, `beta`, `v`); defaults to full power,
    /// an even split and half the maximum speed.
    #[arg(long)]
    design: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Predicted versus empirical convergence rounds at a fixed design.
    ValidateTheorem {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        design: DesignArg,
    },
    /// Convergence rounds over jitter variances and bandwidths.
    SweepSigma {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        design: DesignArg,
        #[arg(long, value_delimiter = ',', default_values_t = experiments::DEFAULT_SIGMA2)]
        sigma2: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = experiments::DEFAULT_BANDWIDTHS)]
        bandwidths: Vec<f64>,
    },
    /// Joint design against randomized baselines per bandwidth.
    CompareDesigns {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = experiments::DEFAULT_BANDWIDTHS)]
        bandwidths: Vec<f64>,
        #[arg(long, default_value_t = experiments::DEFAULT_BASELINE_DRAWS)]
        baseline_draws: usize,
    },
    /// Solves the joint design; writes the dual trace and prints the design.
    Optimize {
        #[command(flatten)]
        common: Common,
    },
    /// Per-round loss trajectories at a fixed design.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        design: DesignArg,
        #[arg(long, default_value_t = 200)]
        rounds: usize,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse(_) | Error::Validation(_) | Error::InvalidInput(_) => EXIT_CONFIG,
        Error::NoFeasibleDesign { .. } | Error::Divergent { .. } => EXIT_INFEASIBLE,
        _ => EXIT_RUNTIME,
    }
}

fn scenario(common: &Common) -> Result<SwarmScenario, Error> {
    let base = match &common.config {
        Some(path) => SwarmScenario::load(path)?,
        None => SwarmScenario::default(),
    };
    base.with(|c| {
        if let Some(seed) = common.seed {
            c.seed = seed;
        }
        if let Some(runs) = common.mc_runs {
            c.mc_runs = runs;
        }
        if let Some(k) = common.samples_k {
            c.samples_k = k;
        }
    })
}

fn design(arg: &DesignArg, scenario: &SwarmScenario) -> Result<DesignVector, Error> {
    let d = match &arg.design {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => DesignVector::nominal(scenario),
    };
    d.validate(scenario)?;
    Ok(d)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::ValidateTheorem { common, design: d } => {
            let s = scenario(&common)?;
            let result = experiments::validate_theorem(&s, &design(&d, &s)?, s.mc_runs)?;
            result.emit_csv(&common.out)?;
            eprintln!(
                "validate-theorem: {} rows in {:.1} s",
                result.records.len(),
                result.wall_time_s
            );
        }
        Command::SweepSigma {
            common,
            design: d,
            sigma2,
            bandwidths,
        } => {
            let s = scenario(&common)?;
            let result =
                experiments::sweep_sigma(&s, &design(&d, &s)?, &sigma2, &bandwidths, s.mc_runs)?;
            result.emit_csv(&common.out)?;
            eprintln!(
                "sweep-sigma: {} rows in {:.1} s",
                result.records.len(),
                result.wall_time_s
            );
        }
        Command::CompareDesigns {
            common,
            bandwidths,
            baseline_draws,
        } => {
            let s = scenario(&common)?;
            let result = experiments::compare_designs(
                &s,
                &bandwidths,
                baseline_draws,
                &SolverConfig::default(),
            )?;
            result.emit_csv(&common.out)?;
            eprintln!(
                "compare-designs: {} rows in {:.1} s",
                result.records.len(),
                result.wall_time_s
            );
        }
        Command::Optimize { common } => {
            let s = scenario(&common)?;
            let (solution, _) = experiments::optimize(&s, &SolverConfig::default())?;
            emit_csv(&trace_records(&solution), &common.out)?;
            println!("{}", serde_json::to_string_pretty(&solution.design)?);
            eprintln!(
                "optimize: predicted round {} after {} dual iterations",
                solution.predicted_round,
                solution.report.trace.len()
            );
        }
        Command::Simulate {
            common,
            design: d,
            rounds,
        } => {
            let s = scenario(&common)?;
            let rows = experiments::simulate(&s, &design(&d, &s)?, rounds, s.mc_runs)?;
            emit_csv(&rows, &common.out)?;
            eprintln!("simulate: {} rows", rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
