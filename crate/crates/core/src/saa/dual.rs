//! Dual methods over the Lagrange multipliers.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::channel::estimate_link_probabilities;
use crate::convergence::convergence_round;
use crate::design::DesignVector;
use crate::error::{Error, Result};

use super::inner::{inner_maximize, InnerConfig, InnerResult};
use super::problem::{ExactCheck, SaaProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DualMethod {
    #[default]
    Subgradient,
    Ellipsoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: DualMethod,
    pub max_iters: usize,
    /// Subgradient step `a / √t`; `None` uses `10 N̄ / K` (see [`default_step_scale`]).
    pub step_scale: Option<f64>,
    /// Radius of the initial ellipsoid around `λ = 0`.
    pub ellipsoid_radius: f64,
    pub inner: InnerConfig,
    /// Channel draws used to estimate the returned design's link probabilities.
    pub mc_samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: DualMethod::Subgradient,
            max_iters: 200,
            step_scale: None,
            ellipsoid_radius: 1e3,
            inner: InnerConfig::default(),
            mc_samples: 10_000,
        }
    }
}

/// Step scale matched to the problem's units. Multipliers trade constraint
/// residuals, which count samples, against the objective, which counts
/// samples weighted by `N_i`; a unit residual per sample should therefore
/// move `λ` by a few multiples of the mean follower size.
pub fn default_step_scale(problem: &SaaProblem) -> f64 {
    let mean_count = problem.profile.total_count() / problem.n_followers() as f64;
    10.0 * mean_count / problem.k() as f64
}

/// Multipliers and bookkeeping of the outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub lambda: Vec<f64>,
    pub best_dual: f64,
    pub best_feasible_primal: Option<DesignVector>,
    best_objective: f64,
}

impl DualState {
    pub fn new(n_rows: usize) -> Self {
        Self {
            lambda: vec![0.0; n_rows],
            best_dual: f64::INFINITY,
            best_feasible_primal: None,
            best_objective: f64::NEG_INFINITY,
        }
    }

    /// Records one inner maximizer.
    fn observe(&mut self, problem: &SaaProblem, inner: &InnerResult) -> Result<ExactCheck> {
        self.best_dual = self.best_dual.min(inner.value);
        let check = problem.check_exact(&inner.design)?;
        if check.feasible {
            let objective = problem.evaluate(&inner.design)?.objective;
            if objective > self.best_objective {
                self.best_objective = objective;
                self.best_feasible_primal = Some(inner.design.clone());
            }
        }
        Ok(check)
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub dual_value: f64,
    pub best_dual: f64,
    pub lambda: Vec<f64>,
    pub subgradient: Vec<f64>,
    /// Unsmoothed constraint margins of the iterate.
    pub margins: Vec<f64>,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub trace: Vec<TraceRow>,
    /// Unsmoothed margins of the returned design.
    pub final_margins: Vec<f64>,
    /// Smoothed objective of the returned design.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub design: DesignVector,
    /// Convergence round at the Monte Carlo link probabilities.
    pub predicted_round: u64,
    pub success_prob: Vec<f64>,
    pub report: SolveReport,
}

/// `Δλ`: the smoothed constraint residuals at the inner maximizer.
pub fn dual_subgradient(problem: &SaaProblem, maximizer: &DesignVector) -> Result<Vec<f64>> {
    Ok(problem.evaluate(maximizer)?.residuals)
}

/// `D(λ)` from a cold start at the box centre.
pub fn dual_value(
    problem: &SaaProblem,
    lambda: &[f64],
    inner: &InnerConfig,
) -> Result<InnerResult> {
    inner_maximize(
        problem,
        lambda,
        &DesignVector::center(&problem.scenario),
        inner,
    )
}

/// Minimizes the dual function and returns the best design that satisfies
/// the unsmoothed sample-average constraints.
pub fn solve(problem: &SaaProblem, config: &SolverConfig, mc_seed: u64) -> Result<Solution> {
    let (state, trace) = match config.method {
        DualMethod::Subgradient => run_subgradient(problem, config)?,
        DualMethod::Ellipsoid => run_ellipsoid(problem, config)?,
    };
    let design = state.best_feasible_primal.ok_or(Error::NoFeasibleDesign {
        iterations: trace.len(),
    })?;
    let check = problem.check_exact(&design)?;
    let probs =
        estimate_link_probabilities(&design, &problem.scenario, config.mc_samples, mc_seed)?;
    let predicted_round = convergence_round(&problem.profile.inputs(probs.joint.clone()))?;
    Ok(Solution {
        report: SolveReport {
            trace,
            final_margins: check.margins,
            objective: problem.evaluate(&design)?.objective,
        },
        design,
        predicted_round,
        success_prob: probs.joint,
    })
}

fn run_subgradient(
    problem: &SaaProblem,
    config: &SolverConfig,
) -> Result<(DualState, Vec<TraceRow>)> {
    let a = config
        .step_scale
        .unwrap_or_else(|| default_step_scale(problem));
    let mut state = DualState::new(problem.n_rows());
    let mut x = DesignVector::center(&problem.scenario);
    let mut trace = Vec::new();
    for t in 1..=config.max_iters {
        let inner = inner_maximize(problem, &state.lambda, &x, &config.inner)?;
        let g = dual_subgradient(problem, &inner.design)?;
        let check = state.observe(problem, &inner)?;
        trace.push(TraceRow {
            iteration: t,
            dual_value: inner.value,
            best_dual: state.best_dual,
            lambda: state.lambda.clone(),
            subgradient: g.clone(),
            margins: check.margins,
            feasible: check.feasible,
        });
        let step = a / (t as f64).sqrt();
        let next: Vec<f64> = state
            .lambda
            .iter()
            .zip(&g)
            .map(|(l, gi)| (l - step * gi).max(0.0))
            .collect();
        let settled = next == state.lambda && inner.design == x;
        state.lambda = next;
        x = inner.design;
        if settled {
            break;
        }
    }
    Ok((state, trace))
}

/// Central-cut ellipsoid method on `D` over `λ ⪰ 0`.
fn run_ellipsoid(
    problem: &SaaProblem,
    config: &SolverConfig,
) -> Result<(DualState, Vec<TraceRow>)> {
    let m = problem.n_rows();
    let mf = m as f64;
    let mut state = DualState::new(m);
    let mut center = DVector::<f64>::zeros(m);
    let mut shape = DMatrix::<f64>::identity(m, m) * config.ellipsoid_radius.powi(2);
    let mut x = DesignVector::center(&problem.scenario);
    let mut trace = Vec::new();
    for t in 1..=config.max_iters {
        let cut = if let Some(j) = center.iter().position(|&c| c < 0.0) {
            // Feasibility cut: keep the half-space λ_j >= center_j.
            let mut g = DVector::zeros(m);
            g[j] = -1.0;
            g
        } else {
            state.lambda = center.iter().copied().collect();
            let inner = inner_maximize(problem, &state.lambda, &x, &config.inner)?;
            let g = dual_subgradient(problem, &inner.design)?;
            let check = state.observe(problem, &inner)?;
            trace.push(TraceRow {
                iteration: t,
                dual_value: inner.value,
                best_dual: state.best_dual,
                lambda: state.lambda.clone(),
                subgradient: g.clone(),
                margins: check.margins,
                feasible: check.feasible,
            });
            x = inner.design;
            DVector::from_vec(g)
        };
        let pg = &shape * &cut;
        let denom = cut.dot(&pg);
        if !(denom > 0.0) {
            break;
        }
        let gt = pg / denom.sqrt();
        center -= &gt / (mf + 1.0);
        if m == 1 {
            // The one-dimensional update halves the interval.
            shape *= 0.25;
        } else {
            shape =
                (shape - (&gt * gt.transpose()) * (2.0 / (mf + 1.0))) * (mf * mf / (mf * mf - 1.0));
        }
    }
    Ok((state, trace))
}
