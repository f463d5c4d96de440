use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::SwarmScenario;

/// Decision variables of the joint design: follower and leader transmit
/// powers (W), the uplink share of the round `beta`, and the swarm speed (m/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignVector {
    pub p: Vec<f64>,
    pub p_leader: f64,
    pub beta: f64,
    pub v: f64,
}

impl DesignVector {
    /// Full power on every link, an even uplink/downlink split and half the
    /// maximum speed.
    pub fn nominal(scenario: &SwarmScenario) -> Self {
        Self {
            p: vec![scenario.p_max; scenario.n_followers],
            p_leader: scenario.p_max,
            beta: 0.5,
            v: 0.5 * scenario.flight.v_max,
        }
    }

    /// Centre of the design box.
    pub fn center(scenario: &SwarmScenario) -> Self {
        Self {
            p: vec![0.5 * scenario.p_max; scenario.n_followers],
            p_leader: 0.5 * scenario.p_max,
            beta: 0.5,
            v: 0.5 * scenario.flight.v_max,
        }
    }

    /// Checks `0 < p <= p_max`, `0 < beta < 1` and `0 < v <= v_max`.
    pub fn validate(&self, scenario: &SwarmScenario) -> Result<()> {
        if self.p.len() != scenario.n_followers {
            return Err(Error::InvalidInput(format!(
                "design has {} follower powers, scenario has {} followers",
                self.p.len(),
                scenario.n_followers
            )));
        }
        let p_ok = |p: f64| p > 0.0 && p <= scenario.p_max;
        if let Some(i) = self.p.iter().position(|&p| !p_ok(p)) {
            return Err(Error::InvalidInput(format!(
                "p[{i}] = {} outside (0, {}]",
                self.p[i], scenario.p_max
            )));
        }
        if !p_ok(self.p_leader) {
            return Err(Error::InvalidInput(format!(
                "p_leader = {} outside (0, {}]",
                self.p_leader, scenario.p_max
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidInput(format!(
                "beta = {} outside (0, 1)",
                self.beta
            )));
        }
        if !(self.v > 0.0 && self.v <= scenario.flight.v_max) {
            return Err(Error::InvalidInput(format!(
                "v = {} outside (0, {}]",
                self.v, scenario.flight.v_max
            )));
        }
        Ok(())
    }

    /// True when every variable lies strictly inside its open interval.
    pub fn strictly_inside(&self, scenario: &SwarmScenario) -> bool {
        let open = |x: f64, hi: f64| x > 0.0 && x < hi;
        self.p.iter().all(|&p| open(p, scenario.p_max))
            && open(self.p_leader, scenario.p_max)
            && open(self.beta, 1.0)
            && open(self.v, scenario.flight.v_max)
    }

    pub fn uplink_window(&self, round_time: f64) -> f64 {
        self.beta * round_time
    }

    pub fn downlink_window(&self, round_time: f64) -> f64 {
        (1.0 - self.beta) * round_time
    }
}
