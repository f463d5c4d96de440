//! Sigmoid surrogate for indicator functions.

use crate::scenario::SwarmScenario;

/// Sharpness and per-row argument scales of the sigmoid surrogate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingConfig {
    pub c_bar: f64,
    /// Scale of delay arguments (s).
    pub delay_scale: f64,
    /// Scale of energy arguments (J).
    pub energy_scale: f64,
}

pub const DEFAULT_C_BAR: f64 = 50.0;

impl SmoothingConfig {
    /// Normalizes delays by the round time and energies by the budget.
    pub fn for_scenario(scenario: &SwarmScenario, c_bar: f64) -> Self {
        Self {
            c_bar,
            delay_scale: scenario.round_time,
            energy_scale: scenario.budget.e_bar,
        }
    }

    pub fn delay(&self, slack: f64) -> f64 {
        sigmoid(slack, self.c_bar, self.delay_scale)
    }

    pub fn energy(&self, slack: f64) -> f64 {
        sigmoid(slack, self.c_bar, self.energy_scale)
    }
}

/// `Γ(r) = 1 / (1 + exp(-c̄ r / normalizer))`
pub fn sigmoid(r: f64, c_bar: f64, normalizer: f64) -> f64 {
    1.0 / (1.0 + (-c_bar * r / normalizer).exp())
}

pub fn indicator(r: f64) -> f64 {
    if r >= 0.0 {
        1.0
    } else {
        0.0
    }
}
