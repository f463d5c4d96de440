//! Experiment harness: theorem validation, jitter/bandwidth sweeps and design
//! comparisons, emitted as tidy CSV.
//!
//! Random streams are derived from the base seed and the repetition index
//! only, never from the grid point, so every grid point sees the same channel
//! and data randomness and differences between points reflect the parameters.

use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::channel::{estimate_link_probabilities, LinkProbabilities};
use crate::convergence::{convergence_round, LearningProfile};
use crate::design::DesignVector;
use crate::energy::{flight_power, EnergyModel};
use crate::error::{Error, Result};
use crate::fl::{
    first_crossing, learning_profile, make_regression_problem, run_fl, Dataset, LossModel,
    SquaredLoss,
};
use crate::saa::{
    baseline_design, solve, BaselineKind, SaaProblem, ScenarioSamples, SmoothingConfig, Solution,
    SolverConfig, DEFAULT_C_BAR,
};
use crate::scenario::SwarmScenario;
use crate::seed;

pub const SCHEMA_VERSION: u32 = 1;

/// Seed stream identifiers.
mod stream {
    pub const DATA: u64 = 1;
    pub const LINK_MC: u64 = 2;
    pub const FL_RUN: u64 = 3;
    pub const SAA: u64 = 4;
    pub const BASELINE: u64 = 5;
}

/// Channel draws behind every Monte Carlo link probability.
pub const LINK_MC_SAMPLES: usize = 20_000;

/// Round cap for a single training run.
pub const MAX_ROUNDS: usize = 10_000;

pub const DEFAULT_SIGMA2: [f64; 4] = [0.01, 0.05, 0.1, 0.2];
pub const DEFAULT_BANDWIDTHS: [f64; 3] = [1e6, 2e6, 5e6];
pub const DEFAULT_BASELINE_DRAWS: usize = 30;

/// The learning problem shared by every experiment on a scenario.
#[derive(Debug, Clone)]
pub struct LearningSetup {
    pub datasets: Vec<Dataset>,
    pub loss: SquaredLoss,
    /// `F(w0) - F(w*)` at the zero initial model.
    pub initial_gap: f64,
    /// `F(w0)`
    pub initial_loss: f64,
    /// Absolute thresholds, `eps_fractions × F(w0)`.
    pub epsilons: Vec<f64>,
}

impl LearningSetup {
    pub fn new(scenario: &SwarmScenario) -> Result<Self> {
        let (datasets, loss) = make_regression_problem(
            &scenario.dataset,
            scenario.n_followers,
            seed::derive(scenario.seed, &[stream::DATA]),
        )?;
        let w0 = DVector::zeros(scenario.dataset.dim);
        let initial_loss = loss.total_loss(&w0, &datasets);
        let initial_gap = loss.excess_loss(&w0, &datasets);
        let epsilons = scenario
            .eps_fractions
            .iter()
            .map(|f| f * initial_loss)
            .collect();
        Ok(Self {
            datasets,
            loss,
            initial_gap,
            initial_loss,
            epsilons,
        })
    }

    pub fn profile(&self, epsilon: f64) -> LearningProfile {
        let w0 = DVector::zeros(self.loss.constants().w_star.len());
        learning_profile(&self.loss, &self.datasets, &w0, epsilon)
    }

    /// The tightest threshold, which the optimizer designs for.
    pub fn design_epsilon(&self) -> f64 {
        self.epsilons.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub schema_version: u32,
    pub experiment: &'static str,
    pub point: usize,
    /// `joint`, `nominal`, `power-only` or `scheduling-only`.
    pub design_kind: &'static str,
    #[serde(serialize_with = "sci")]
    pub sigma2: f64,
    #[serde(serialize_with = "sci")]
    pub bandwidth_hz: f64,
    #[serde(serialize_with = "sci")]
    pub eps_fraction: f64,
    #[serde(serialize_with = "sci")]
    pub epsilon: f64,
    #[serde(serialize_with = "sci")]
    pub predicted_phi: f64,
    #[serde(serialize_with = "sci")]
    pub empirical_phi_mean: f64,
    #[serde(serialize_with = "sci")]
    pub empirical_phi_std: f64,
    /// Repetitions behind the empirical columns, or baseline draws.
    pub runs: usize,
    /// Runs that hit the round cap, or baseline draws with no finite prediction.
    pub unfinished: usize,
    #[serde(serialize_with = "sci")]
    pub relative_gap: f64,
    #[serde(serialize_with = "sci")]
    pub reduction_pct: f64,
    #[serde(serialize_with = "sci_list")]
    pub success_prob: Vec<f64>,
    #[serde(serialize_with = "sci_list")]
    pub p: Vec<f64>,
    #[serde(serialize_with = "sci")]
    pub p_leader: f64,
    #[serde(serialize_with = "sci")]
    pub beta: f64,
    #[serde(serialize_with = "sci")]
    pub v: f64,
    /// Leader energy over the predicted number of rounds.
    #[serde(serialize_with = "sci")]
    pub leader_energy_j: f64,
}

/// Nine significant digits; non-finite values as `inf`, `-inf` or `nan`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.8e}")
    }
}

fn sci<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_float(*x))
}

fn sci_list<S: Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let joined: Vec<String> = xs.iter().map(|&x| format_float(x)).collect();
    s.serialize_str(&joined.join(";"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub records: Vec<Record>,
    /// Kept out of the CSV so that output is byte-for-byte reproducible.
    pub wall_time_s: f64,
}

impl ExperimentResult {
    pub fn emit_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        emit_csv(&self.records, path)
    }
}

/// A row type with a fixed column list, so empty outputs still get a header.
pub trait CsvRow: Serialize {
    const COLUMNS: &'static [&'static str];
}

/// Writes rows with a header, in order. An empty slice gives a header-only
/// file.
pub fn emit_csv<T: CsvRow>(rows: &[T], path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    writer.write_record(T::COLUMNS)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

impl CsvRow for Record {
    const COLUMNS: &'static [&'static str] = &[
        "schema_version",
        "experiment",
        "point",
        "design_kind",
        "sigma2",
        "bandwidth_hz",
        "eps_fraction",
        "epsilon",
        "predicted_phi",
        "empirical_phi_mean",
        "empirical_phi_std",
        "runs",
        "unfinished",
        "relative_gap",
        "reduction_pct",
        "success_prob",
        "p",
        "p_leader",
        "beta",
        "v",
        "leader_energy_j",
    ];
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn link_probabilities(
    scenario: &SwarmScenario,
    design: &DesignVector,
) -> Result<LinkProbabilities> {
    estimate_link_probabilities(
        design,
        scenario,
        LINK_MC_SAMPLES,
        seed::derive(scenario.seed, &[stream::LINK_MC]),
    )
}

/// Predicted convergence round, infinite when no link ever succeeds.
pub fn predicted_phi(profile: &LearningProfile, success_prob: &[f64]) -> Result<f64> {
    match convergence_round(&profile.inputs(success_prob.to_vec())) {
        Ok(r) => Ok(r as f64),
        Err(Error::Divergent { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

fn leader_energy(scenario: &SwarmScenario, design: &DesignVector, rounds: f64) -> Result<f64> {
    let fly = flight_power(&scenario.flight, design.v)?;
    Ok(rounds * EnergyModel::new(scenario).leader_round(design, scenario.round_time, fly))
}

/// First crossing round of each threshold in each of `runs` training runs.
/// Row `r` holds run `r`; `None` marks a run that hit the cap.
pub fn empirical_crossings(
    scenario: &SwarmScenario,
    design: &DesignVector,
    setup: &LearningSetup,
    runs: usize,
) -> Result<Vec<Vec<Option<usize>>>> {
    let target = setup.design_epsilon();
    (0..runs)
        .into_par_iter()
        .map(|r| {
            let (state, _) = run_fl(
                scenario,
                design,
                &setup.loss,
                &setup.datasets,
                MAX_ROUNDS,
                target,
                seed::derive(scenario.seed, &[stream::FL_RUN, r as u64]),
            )?;
            Ok(setup
                .epsilons
                .iter()
                .map(|&e| first_crossing(&state.gap_history, e))
                .collect())
        })
        .collect()
}

/// Parameter coordinates shared by the rows of one grid point.
struct PointInfo {
    experiment: &'static str,
    point: usize,
    design_kind: &'static str,
}

/// Predicted and empirical rounds for every threshold at one design.
fn theorem_rows(
    info: PointInfo,
    scenario: &SwarmScenario,
    design: &DesignVector,
    setup: &LearningSetup,
    mc_runs: usize,
) -> Result<Vec<Record>> {
    let probs = link_probabilities(scenario, design)?;
    let crossings = empirical_crossings(scenario, design, setup, mc_runs)?;
    setup
        .epsilons
        .iter()
        .enumerate()
        .map(|(j, &eps)| {
            let predicted = predicted_phi(&setup.profile(eps), &probs.joint)?;
            let rounds: Vec<f64> = crossings
                .iter()
                .map(|row| row[j].map_or(MAX_ROUNDS as f64, |r| r as f64))
                .collect();
            let unfinished = crossings.iter().filter(|row| row[j].is_none()).count();
            let (mean, std) = mean_std(&rounds);
            Ok(Record {
                schema_version: SCHEMA_VERSION,
                experiment: info.experiment,
                point: info.point,
                design_kind: info.design_kind,
                sigma2: scenario.antenna.sigma2,
                bandwidth_hz: scenario.radio.bw_up,
                eps_fraction: scenario.eps_fractions[j],
                epsilon: eps,
                predicted_phi: predicted,
                empirical_phi_mean: mean,
                empirical_phi_std: std,
                runs: mc_runs,
                unfinished,
                relative_gap: (predicted - mean).abs() / predicted,
                reduction_pct: f64::NAN,
                success_prob: probs.joint.clone(),
                p: design.p.clone(),
                p_leader: design.p_leader,
                beta: design.beta,
                v: design.v,
                leader_energy_j: leader_energy(scenario, design, predicted)?,
            })
        })
        .collect()
}

/// Predicted versus empirical convergence rounds over the scenario's
/// thresholds at a fixed design.
pub fn validate_theorem(
    scenario: &SwarmScenario,
    design: &DesignVector,
    mc_runs: usize,
) -> Result<ExperimentResult> {
    let start = Instant::now();
    design.validate(scenario)?;
    let setup = LearningSetup::new(scenario)?;
    check_epsilons(&setup)?;
    let info = PointInfo {
        experiment: "validate-theorem",
        point: 0,
        design_kind: "fixed",
    };
    let records = theorem_rows(info, scenario, design, &setup, mc_runs)?;
    Ok(ExperimentResult {
        records,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn check_epsilons(setup: &LearningSetup) -> Result<()> {
    if setup.epsilons.is_empty() {
        return Err(Error::InvalidInput("eps_fractions is empty".into()));
    }
    Ok(())
}

/// Convergence rounds over a grid of jitter variances and bandwidths.
/// Points are ordered bandwidth-major.
pub fn sweep_sigma(
    scenario: &SwarmScenario,
    design: &DesignVector,
    sigma2_list: &[f64],
    bw_list: &[f64],
    mc_runs: usize,
) -> Result<ExperimentResult> {
    let start = Instant::now();
    let setup = LearningSetup::new(scenario)?;
    check_epsilons(&setup)?;
    let grid: Vec<(f64, f64)> = bw_list
        .iter()
        .flat_map(|&bw| sigma2_list.iter().map(move |&s2| (bw, s2)))
        .collect();
    let per_point: Vec<Vec<Record>> = grid
        .par_iter()
        .enumerate()
        .map(|(point, &(bw, s2))| {
            let s = scenario.with(|c| {
                c.antenna.sigma2 = s2;
                c.radio.bw_up_hz = bw;
                c.radio.bw_down_hz = bw;
            })?;
            design.validate(&s)?;
            let info = PointInfo {
                experiment: "sweep-sigma",
                point,
                design_kind: "fixed",
            };
            theorem_rows(info, &s, design, &setup, mc_runs)
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentResult {
        records: per_point.into_iter().flatten().collect(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Builds the sample-average problem for a scenario at the design threshold.
pub fn build_problem(scenario: &SwarmScenario, setup: &LearningSetup) -> Result<SaaProblem> {
    let samples = ScenarioSamples::generate(
        scenario,
        scenario.samples_k,
        seed::derive(scenario.seed, &[stream::SAA]),
    )?;
    SaaProblem::new(
        scenario.clone(),
        samples,
        setup.profile(setup.design_epsilon()),
        SmoothingConfig::for_scenario(scenario, DEFAULT_C_BAR),
    )
}

/// Solves the joint design for a scenario.
pub fn optimize(
    scenario: &SwarmScenario,
    config: &SolverConfig,
) -> Result<(Solution, LearningSetup)> {
    let setup = LearningSetup::new(scenario)?;
    let problem = build_problem(scenario, &setup)?;
    let solution = solve(
        &problem,
        config,
        seed::derive(scenario.seed, &[stream::LINK_MC]),
    )?;
    Ok((solution, setup))
}

/// Joint design against randomized power-only and scheduling-only baselines
/// at each bandwidth, all at the tightest threshold.
pub fn compare_designs(
    scenario: &SwarmScenario,
    bw_list: &[f64],
    n_baseline_draws: usize,
    config: &SolverConfig,
) -> Result<ExperimentResult> {
    let start = Instant::now();
    if n_baseline_draws == 0 {
        return Err(Error::InvalidInput(
            "need at least one baseline draw".into(),
        ));
    }
    let setup = LearningSetup::new(scenario)?;
    let eps = setup.design_epsilon();
    let eps_fraction = eps / setup.initial_loss;
    let profile = setup.profile(eps);
    let per_point: Vec<Vec<Record>> = bw_list
        .par_iter()
        .enumerate()
        .map(|(point, &bw)| {
            let s = scenario.with_bandwidth(bw)?;
            let problem = build_problem(&s, &setup)?;
            let joint = solve(&problem, config, seed::derive(s.seed, &[stream::LINK_MC]))?;
            let joint_phi = predicted_phi(&profile, &joint.success_prob)?;
            let record = |kind: &'static str,
                          design: &DesignVector,
                          predicted: f64,
                          runs: usize,
                          unfinished: usize,
                          probs: Vec<f64>,
                          reduction: f64|
             -> Result<Record> {
                Ok(Record {
                    schema_version: SCHEMA_VERSION,
                    experiment: "compare-designs",
                    point,
                    design_kind: kind,
                    sigma2: s.antenna.sigma2,
                    bandwidth_hz: bw,
                    eps_fraction,
                    epsilon: eps,
                    predicted_phi: predicted,
                    empirical_phi_mean: f64::NAN,
                    empirical_phi_std: f64::NAN,
                    runs,
                    unfinished,
                    relative_gap: f64::NAN,
                    reduction_pct: reduction,
                    success_prob: probs,
                    p: design.p.clone(),
                    p_leader: design.p_leader,
                    beta: design.beta,
                    v: design.v,
                    leader_energy_j: leader_energy(&s, design, predicted)?,
                })
            };
            let mut rows = vec![record(
                "joint",
                &joint.design,
                joint_phi,
                1,
                0,
                joint.success_prob.clone(),
                0.0,
            )?];
            for (kind_index, kind) in [BaselineKind::PowerOnly, BaselineKind::SchedulingOnly]
                .into_iter()
                .enumerate()
            {
                let draws: Vec<(DesignVector, f64, Vec<f64>)> = (0..n_baseline_draws)
                    .map(|d| {
                        let design = baseline_design(
                            kind,
                            &joint.design,
                            &s,
                            seed::derive(s.seed, &[stream::BASELINE, kind_index as u64, d as u64]),
                        );
                        let probs = link_probabilities(&s, &design)?;
                        let phi = predicted_phi(&profile, &probs.joint)?;
                        Ok((design, phi, probs.joint))
                    })
                    .collect::<Result<_>>()?;
                let finite: Vec<f64> = draws
                    .iter()
                    .map(|d| d.1)
                    .filter(|x| x.is_finite())
                    .collect();
                let unfinished = n_baseline_draws - finite.len();
                let (mean, _) = mean_std(&finite);
                let mean_probs: Vec<f64> = (0..s.n_followers)
                    .map(|i| draws.iter().map(|d| d.2[i]).sum::<f64>() / n_baseline_draws as f64)
                    .collect();
                let reduction = 100.0 * (mean - joint_phi) / mean;
                // The row shows the baseline's fixed part; the random part is averaged out.
                let mut shown = joint.design.clone();
                match kind {
                    BaselineKind::PowerOnly => shown.beta = f64::NAN,
                    BaselineKind::SchedulingOnly => {
                        shown.p.iter_mut().for_each(|p| *p = f64::NAN);
                        shown.p_leader = f64::NAN;
                    }
                }
                let mut row = record(
                    kind.label(),
                    &shown,
                    mean,
                    n_baseline_draws,
                    unfinished,
                    mean_probs,
                    reduction,
                )?;
                row.leader_energy_j = f64::NAN;
                rows.push(row);
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentResult {
        records: per_point.into_iter().flatten().collect(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// One dual iteration, flattened for CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub schema_version: u32,
    pub iteration: usize,
    #[serde(serialize_with = "sci")]
    pub dual_value: f64,
    #[serde(serialize_with = "sci")]
    pub best_dual: f64,
    #[serde(serialize_with = "sci_list")]
    pub lambda: Vec<f64>,
    #[serde(serialize_with = "sci_list")]
    pub subgradient: Vec<f64>,
    #[serde(serialize_with = "sci_list")]
    pub margins: Vec<f64>,
    pub feasible: bool,
}

impl CsvRow for TraceRecord {
    const COLUMNS: &'static [&'static str] = &[
        "schema_version",
        "iteration",
        "dual_value",
        "best_dual",
        "lambda",
        "subgradient",
        "margins",
        "feasible",
    ];
}

pub fn trace_records(solution: &Solution) -> Vec<TraceRecord> {
    solution
        .report
        .trace
        .iter()
        .map(|t| TraceRecord {
            schema_version: SCHEMA_VERSION,
            iteration: t.iteration,
            dual_value: t.dual_value,
            best_dual: t.best_dual,
            lambda: t.lambda.clone(),
            subgradient: t.subgradient.clone(),
            margins: t.margins.clone(),
            feasible: t.feasible,
        })
        .collect()
}

/// One training round of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub schema_version: u32,
    pub run: usize,
    pub round: usize,
    #[serde(serialize_with = "sci")]
    pub loss: f64,
    #[serde(serialize_with = "sci")]
    pub gap: f64,
    pub participants: usize,
}

impl CsvRow for RoundRecord {
    const COLUMNS: &'static [&'static str] = &[
        "schema_version",
        "run",
        "round",
        "loss",
        "gap",
        "participants",
    ];
}

/// Loss trajectories of `runs` training runs of `rounds` rounds each.
pub fn simulate(
    scenario: &SwarmScenario,
    design: &DesignVector,
    rounds: usize,
    runs: usize,
) -> Result<Vec<RoundRecord>> {
    let setup = LearningSetup::new(scenario)?;
    let per_run: Vec<Vec<RoundRecord>> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let (state, _) = run_fl(
                scenario,
                design,
                &setup.loss,
                &setup.datasets,
                rounds,
                f64::MIN_POSITIVE,
                seed::derive(scenario.seed, &[stream::FL_RUN, r as u64]),
            )?;
            Ok((0..state.loss_history.len())
                .map(|t| RoundRecord {
                    schema_version: SCHEMA_VERSION,
                    run: r,
                    round: t,
                    loss: state.loss_history[t],
                    gap: state.gap_history[t],
                    participants: if t == 0 {
                        0
                    } else {
                        state.participation_history[t - 1]
                            .iter()
                            .filter(|&&c| c)
                            .count()
                    },
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_run.into_iter().flatten().collect())
}
