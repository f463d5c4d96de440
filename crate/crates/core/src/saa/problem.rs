//! Smoothed and exact evaluation of the sample-average design problem.
//!
//! Constraint rows are ordered leader energy, follower energy `1..=I`, then
//! follower control delay `1..=I`. A row is satisfied when its residual is
//! nonnegative.

use crate::convergence::LearningProfile;
use crate::design::DesignVector;
use crate::energy::{flight_power, EnergyModel};
use crate::error::{Error, Result};
use crate::scenario::SwarmScenario;

use super::samples::ScenarioSamples;
use super::smoothing::{indicator, SmoothingConfig};

/// Per-sample delays of every link at fixed transmit powers, laid out
/// `[follower][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayTable {
    pub up: Vec<Vec<f64>>,
    pub down: Vec<Vec<f64>>,
}

/// Values of the smoothed problem at one design.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// `Σ_i Σ_k N_i Γ(T_u - T_iL,k) Γ(T_d - T_Li,k)`
    pub objective: f64,
    /// Length `2I + 1`.
    pub residuals: Vec<f64>,
    /// Smoothed per-follower success frequency.
    pub success: Vec<f64>,
    /// Convergence round implied by `success`, not rounded up.
    pub rounds: f64,
}

/// The unsmoothed sample-average constraints at one design.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactCheck {
    pub feasible: bool,
    /// Satisfied-sample count minus the required count, per row.
    pub margins: Vec<f64>,
    /// Indicator success frequency per follower.
    pub success: Vec<f64>,
    /// Convergence round from `success`; `None` when nothing gets through.
    pub rounds: Option<u64>,
}

/// A design problem with its frozen samples.
#[derive(Debug, Clone)]
pub struct SaaProblem {
    pub scenario: SwarmScenario,
    pub samples: ScenarioSamples,
    pub profile: LearningProfile,
    pub smoothing: SmoothingConfig,
    energy: EnergyModel,
}

impl SaaProblem {
    pub fn new(
        scenario: SwarmScenario,
        samples: ScenarioSamples,
        profile: LearningProfile,
        smoothing: SmoothingConfig,
    ) -> Result<Self> {
        if profile.counts.len() != scenario.n_followers {
            return Err(Error::InvalidInput(format!(
                "learning profile has {} followers, scenario has {}",
                profile.counts.len(),
                scenario.n_followers
            )));
        }
        if !(smoothing.c_bar > 0.0) {
            return Err(Error::InvalidInput("c_bar must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::InvalidInput("need at least one sample".into()));
        }
        let energy = EnergyModel::new(&scenario);
        Ok(Self {
            scenario,
            samples,
            profile,
            smoothing,
            energy,
        })
    }

    pub fn n_followers(&self) -> usize {
        self.scenario.n_followers
    }

    pub fn n_rows(&self) -> usize {
        2 * self.n_followers() + 1
    }

    pub fn k(&self) -> usize {
        self.samples.len()
    }

    pub fn delays(&self, design: &DesignVector) -> DelayTable {
        let n = self.n_followers();
        let mut table = DelayTable {
            up: vec![Vec::new(); n],
            down: vec![Vec::new(); n],
        };
        for i in 0..n {
            self.set_follower_power(&mut table, i, design.p[i]);
        }
        self.set_leader_power(&mut table, design.p_leader);
        table
    }

    pub fn set_follower_power(&self, table: &mut DelayTable, i: usize, p: f64) {
        let s = &self.scenario;
        table.up[i] = self
            .samples
            .links
            .iter()
            .map(|l| l.uplink_delay(s, i, p))
            .collect();
    }

    pub fn set_leader_power(&self, table: &mut DelayTable, p_leader: f64) {
        let s = &self.scenario;
        for i in 0..self.n_followers() {
            table.down[i] = self
                .samples
                .links
                .iter()
                .map(|l| l.downlink_delay(s, i, p_leader))
                .collect();
        }
    }

    pub fn evaluate(&self, design: &DesignVector) -> Result<Evaluation> {
        self.evaluate_with(design, &self.delays(design))
    }

    /// Evaluates with delays already computed for the design's powers.
    pub fn evaluate_with(&self, design: &DesignVector, delays: &DelayTable) -> Result<Evaluation> {
        let s = &self.scenario;
        let sm = &self.smoothing;
        let n = self.n_followers();
        let k = self.k() as f64;
        let up_window = design.uplink_window(s.round_time);
        let down_window = design.downlink_window(s.round_time);

        let mut success = vec![0.0; n];
        let mut control = vec![0.0; n];
        for i in 0..n {
            let tau = s.control.tau[i];
            for (tu, td) in delays.up[i].iter().zip(&delays.down[i]) {
                success[i] += sm.delay(up_window - tu) * sm.delay(down_window - td);
                control[i] += sm.delay(tau - td);
            }
        }
        let weighted: f64 = success
            .iter()
            .zip(&self.profile.counts)
            .map(|(x, &c)| c as f64 * x)
            .sum();
        for x in &mut success {
            *x /= k;
        }
        let rounds = self.profile.rounds_for_weighted_success(weighted / k);

        let fly = flight_power(&s.flight, design.v)?;
        let e_bar = s.budget.e_bar;
        let mut residuals = Vec::with_capacity(self.n_rows());
        let leader = self.energy.leader_round(design, s.round_time, fly);
        let leader_ok = if rounds.is_finite() {
            sm.energy(e_bar - rounds * leader)
        } else {
            0.0
        };
        residuals.push(k * leader_ok - k * s.budget.xi_leader);
        for i in 0..n {
            let mut ok = 0.0;
            if rounds.is_finite() {
                for tu in &delays.up[i] {
                    let e = self
                        .energy
                        .follower_round(i, design, *tu, s.round_time, fly);
                    ok += sm.energy(e_bar - rounds * e);
                }
            }
            residuals.push(ok - k * s.budget.xi_follower[i]);
        }
        for c in control {
            residuals.push(c - k * s.control.xi_control);
        }
        Ok(Evaluation {
            objective: weighted,
            residuals,
            success,
            rounds,
        })
    }

    /// `J(λ, x) = objective + λ · residuals`
    pub fn lagrangian(&self, design: &DesignVector, lambda: &[f64]) -> Result<f64> {
        Ok(lagrangian_value(&self.evaluate(design)?, lambda))
    }

    /// Checks the sample-average constraints with indicators in place of
    /// sigmoids and the rounded-up convergence round.
    pub fn check_exact(&self, design: &DesignVector) -> Result<ExactCheck> {
        let s = &self.scenario;
        let n = self.n_followers();
        let k = self.k() as f64;
        let delays = self.delays(design);
        let up_window = design.uplink_window(s.round_time);
        let down_window = design.downlink_window(s.round_time);

        let success: Vec<f64> = (0..n)
            .map(|i| {
                delays.up[i]
                    .iter()
                    .zip(&delays.down[i])
                    .filter(|(tu, td)| **tu <= up_window && **td <= down_window)
                    .count() as f64
                    / k
            })
            .collect();
        let weighted: f64 = success
            .iter()
            .zip(&self.profile.counts)
            .map(|(x, &c)| c as f64 * x)
            .sum();
        let real_rounds = self.profile.rounds_for_weighted_success(weighted);
        let rounds = real_rounds.is_finite().then(|| real_rounds.ceil() as u64);

        let fly = flight_power(&s.flight, design.v)?;
        let e_bar = s.budget.e_bar;
        let mut margins = Vec::with_capacity(self.n_rows());
        let phi = rounds.map(|r| r as f64);
        let leader = self.energy.leader_round(design, s.round_time, fly);
        let leader_ok = phi.map_or(0.0, |phi| indicator(e_bar - phi * leader));
        margins.push(k * leader_ok - k * s.budget.xi_leader);
        for i in 0..n {
            let ok: f64 = match phi {
                Some(phi) => delays.up[i]
                    .iter()
                    .map(|tu| {
                        indicator(
                            e_bar
                                - phi
                                    * self
                                        .energy
                                        .follower_round(i, design, *tu, s.round_time, fly),
                        )
                    })
                    .sum(),
                None => 0.0,
            };
            margins.push(ok - k * s.budget.xi_follower[i]);
        }
        for i in 0..n {
            let ok: f64 = delays.down[i]
                .iter()
                .map(|td| indicator(s.control.tau[i] - td))
                .sum();
            margins.push(ok - k * s.control.xi_control);
        }
        let feasible = rounds.is_some()
            && margins.iter().all(|&m| m >= -1e-9 * k)
            && design.strictly_inside(s);
        Ok(ExactCheck {
            feasible,
            margins,
            success,
            rounds,
        })
    }
}

pub fn lagrangian_value(eval: &Evaluation, lambda: &[f64]) -> f64 {
    eval.objective
        + eval
            .residuals
            .iter()
            .zip(lambda)
            .map(|(r, l)| r * l)
            .sum::<f64>()
}
