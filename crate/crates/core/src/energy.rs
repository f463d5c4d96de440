//! Training, transmission and flight energy.

use std::f64::consts::PI;

use crate::design::DesignVector;
use crate::error::{Error, Result};
use crate::scenario::SwarmScenario;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComputeParams {
    /// Effective switched capacitance.
    pub kappa: f64,
    pub cycles_per_bit: f64,
    /// CPU frequency (cycles/s).
    pub cpu_freq: f64,
}

impl ComputeParams {
    /// Energy per processed bit, `κ C f²`.
    pub fn joules_per_bit(&self) -> f64 {
        self.kappa * self.cycles_per_bit * self.cpu_freq * self.cpu_freq
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightParams {
    pub rotors: u32,
    pub rotor_diameter: f64,
    pub air_density: f64,
    pub efficiency: f64,
    pub mass: f64,
    pub gravity: f64,
    pub v_max: f64,
}

impl FlightParams {
    /// Thrust `A = m g` needed to hold altitude.
    pub fn thrust(&self) -> f64 {
        self.mass * self.gravity
    }

    /// `2A / (q r² π ϱ)`, the square of the hover induced velocity.
    fn momentum_constant(&self) -> f64 {
        2.0 * self.thrust()
            / (self.rotors as f64 * self.rotor_diameter.powi(2) * PI * self.air_density)
    }

    pub fn hover_induced_velocity(&self) -> f64 {
        self.momentum_constant().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBudget {
    pub e_bar: f64,
    pub xi_leader: f64,
    pub xi_follower: Vec<f64>,
}

/// Control-loop delay requirements on the downlink.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlRequirements {
    pub tau: Vec<f64>,
    pub xi_control: f64,
}

/// Energy the leader spends aggregating the followers' local models.
pub fn training_energy_leader(
    compute: &ComputeParams,
    pkt_local_bits: f64,
    n_followers: usize,
) -> f64 {
    compute.joules_per_bit() * pkt_local_bits * n_followers as f64
}

/// Energy a follower spends processing its local samples.
pub fn training_energy_follower(compute: &ComputeParams, sample_bits: &[f64]) -> f64 {
    compute.joules_per_bit() * sample_bits.iter().sum::<f64>()
}

const DAMPING: f64 = 0.5;
const MAX_ITERS: usize = 200;

/// Solves `v̂ = 2A / (q r² π ϱ √(v² + v̂²))` by damped fixed-point iteration
/// from the hover solution.
pub fn induced_velocity(flight: &FlightParams, v: f64) -> Result<f64> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "speed {v} must be finite and >= 0"
        )));
    }
    let c = flight.momentum_constant();
    let residual = |x: f64| (x * (v * v + x * x).sqrt() - c).abs();
    let mut x = c.sqrt();
    for _ in 0..MAX_ITERS {
        if residual(x) < 1e-12 * c.max(1.0) {
            return Ok(x);
        }
        let next = (1.0 - DAMPING) * x + DAMPING * c / (v * v + x * x).sqrt();
        if next == x {
            break;
        }
        x = next;
    }
    if residual(x) < 1e-9 {
        Ok(x)
    } else {
        Err(Error::NonConvergence {
            what: "induced velocity",
            iterations: MAX_ITERS,
        })
    }
}

/// Propulsion power `p̄(v) = v̂(v) A / η` (W).
pub fn flight_power(flight: &FlightParams, v: f64) -> Result<f64> {
    Ok(induced_velocity(flight, v)? * flight.thrust() / flight.efficiency)
}

/// Whose energy a [`round_energy`] call accounts for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Leader,
    Follower(usize),
}

/// Per-round energy terms that do not depend on the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyModel {
    pub leader_training: f64,
    pub follower_training: Vec<f64>,
}

impl EnergyModel {
    pub fn new(scenario: &SwarmScenario) -> Self {
        let per_follower =
            vec![scenario.dataset.sample_bits; scenario.dataset.samples_per_follower];
        Self {
            leader_training: training_energy_leader(
                &scenario.compute,
                scenario.radio.pkt_local,
                scenario.n_followers,
            ),
            follower_training: vec![
                training_energy_follower(&scenario.compute, &per_follower);
                scenario.n_followers
            ],
        }
    }

    /// Leader: `E_L + p_L T_d(β) + p̄(v) T_r`.
    pub fn leader_round(&self, design: &DesignVector, round_time: f64, flight_power: f64) -> f64 {
        self.leader_training
            + design.p_leader * design.downlink_window(round_time)
            + flight_power * round_time
    }

    /// Follower `i`: `E_i + p_i T_iL + p̄(v) T_r`.
    pub fn follower_round(
        &self,
        i: usize,
        design: &DesignVector,
        uplink_delay: f64,
        round_time: f64,
        flight_power: f64,
    ) -> f64 {
        self.follower_training[i] + design.p[i] * uplink_delay + flight_power * round_time
    }
}

/// Energy one UAV spends in one round. `uplink_delay` is the follower's
/// realized upload time and is ignored for the leader, which pays for its
/// whole downlink window.
pub fn round_energy(
    role: Role,
    design: &DesignVector,
    uplink_delay: f64,
    scenario: &SwarmScenario,
) -> Result<f64> {
    let model = EnergyModel::new(scenario);
    let fly = flight_power(&scenario.flight, design.v)?;
    Ok(match role {
        Role::Leader => model.leader_round(design, scenario.round_time, fly),
        Role::Follower(i) => {
            if i >= scenario.n_followers {
                return Err(Error::InvalidInput(format!("follower {i} out of range")));
            }
            model.follower_round(i, design, uplink_delay, scenario.round_time, fly)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn table_compute() -> ComputeParams {
        ComputeParams {
            kappa: 1e-28,
            cycles_per_bit: 1e3,
            cpu_freq: 1e9,
        }
    }

    fn flight() -> FlightParams {
        SwarmScenario::default().flight
    }

    #[test]
    fn leader_training_energy() {
        let c = table_compute();
        assert_relative_eq!(
            training_energy_leader(&c, 8e4, 5),
            0.04,
            max_relative = 1e-12
        );
        assert_eq!(training_energy_leader(&c, 8e4, 0), 0.0);
        let fast = ComputeParams { cpu_freq: 2e9, ..c };
        assert_relative_eq!(
            training_energy_leader(&fast, 8e4, 5),
            4.0 * training_energy_leader(&c, 8e4, 5),
            max_relative = 1e-12
        );
    }

    #[test]
    fn follower_training_energy() {
        let c = table_compute();
        assert_eq!(training_energy_follower(&c, &[]), 0.0);
        assert_relative_eq!(
            training_energy_follower(&c, &[8e4]),
            0.008,
            max_relative = 1e-12
        );
        let a = [1e3, 2e3];
        let b = [5e4];
        assert_relative_eq!(
            training_energy_follower(&c, &[1e3, 2e3, 5e4]),
            training_energy_follower(&c, &a) + training_energy_follower(&c, &b),
            max_relative = 1e-12
        );
    }

    #[test]
    fn hover_induced_velocity() {
        let f = flight();
        let closed = (2.0 * 2.0 * 9.81 / (4.0 * 0.254f64.powi(2) * PI * 1.225)).sqrt();
        let v0 = induced_velocity(&f, 0.0).unwrap();
        assert!((v0 - closed).abs() < 1e-6);
        assert!((v0 - 6.29).abs() < 0.01);
        let heavy = FlightParams { mass: 4.0, ..f };
        assert_relative_eq!(
            induced_velocity(&heavy, 0.0).unwrap(),
            v0 * 2f64.sqrt(),
            max_relative = 1e-9
        );
    }

    #[test]
    fn induced_velocity_residual_on_grid() {
        let f = flight();
        let c = f.momentum_constant();
        for v in 0..=20 {
            let v = v as f64;
            let x = induced_velocity(&f, v).unwrap();
            assert!((x * (v * v + x * x).sqrt() - c).abs() < 1e-9, "v = {v}");
        }
    }

    #[test]
    fn induced_velocity_vanishes_at_high_speed() {
        let f = flight();
        let mut prev = f64::INFINITY;
        for v in [0.0, 1.0, 10.0, 100.0, 1e3, 1e4] {
            let x = induced_velocity(&f, v).unwrap();
            assert!(x < prev);
            prev = x;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn hover_power() {
        let f = flight();
        let p = flight_power(&f, 0.0).unwrap();
        assert_relative_eq!(p, 176.3, max_relative = 2e-3);
        let ideal = FlightParams {
            efficiency: 1.0,
            ..f
        };
        assert_relative_eq!(
            flight_power(&ideal, 3.0).unwrap(),
            induced_velocity(&f, 3.0).unwrap() * f.thrust(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn leader_round_energy_example() {
        let s = SwarmScenario::default();
        let design = DesignVector {
            p: vec![0.5; 5],
            p_leader: 0.5,
            beta: 0.5,
            v: 0.0,
        };
        // Hover is outside the open design box, so evaluate the model directly.
        let model = EnergyModel::new(&s);
        let e = model.leader_round(&design, s.round_time, flight_power(&s.flight, 0.0).unwrap());
        assert_relative_eq!(e, 0.04 + 0.5 * 0.05 + 17.63, max_relative = 2e-3);
        assert_relative_eq!(e, 17.7, max_relative = 5e-3);
    }

    #[test]
    fn round_energy_reduces_to_flight_without_radio_or_compute() {
        let s = SwarmScenario::default()
            .with(|c| c.compute.kappa = 1e-300)
            .unwrap();
        let design = DesignVector::nominal(&s);
        let e = round_energy(Role::Follower(0), &design, 0.0, &s).unwrap();
        let fly = flight_power(&s.flight, design.v).unwrap() * s.round_time;
        assert_relative_eq!(e, fly, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn flight_power_decreases_with_speed(a in 0.01f64..20.0, b in 0.01f64..20.0) {
            prop_assume!((a - b).abs() > 1e-6);
            let f = flight();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(flight_power(&f, lo).unwrap() > flight_power(&f, hi).unwrap());
        }

        #[test]
        fn round_energy_is_nonnegative(v in 0.01f64..20.0, p in 0.001f64..0.5, t in 0.0f64..1.0) {
            let s = SwarmScenario::default();
            let mut d = DesignVector::nominal(&s);
            d.v = v;
            d.p[1] = p;
            prop_assert!(round_energy(Role::Follower(1), &d, t, &s).unwrap() >= 0.0);
            prop_assert!(round_energy(Role::Leader, &d, t, &s).unwrap() >= 0.0);
        }
    }
}
