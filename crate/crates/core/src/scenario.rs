//! Scenario configuration.
//!
//! A scenario is read from JSON in user-facing units (dB, dBm/Hz, kilobytes),
//! filled with defaults, validated field by field and converted once into SI
//! units. Every field is optional: `{}` yields the reference parameter set.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{AntennaPattern, GainModel, InterferenceField, Interferer, RadioParams};
use crate::energy::{ComputeParams, ControlRequirements, EnergyBudget, FlightParams};
use crate::error::{Error, Result};

/// A per-follower quantity given either once for all followers or as a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerFollower {
    Uniform(f64),
    Each(Vec<f64>),
}

impl PerFollower {
    fn resolve(&self, n: usize, field: &str, errors: &mut Vec<String>) -> Vec<f64> {
        match self {
            PerFollower::Uniform(x) => vec![*x; n],
            PerFollower::Each(xs) => {
                if xs.len() != n {
                    errors.push(format!("{field}: expected {n} values, got {}", xs.len()));
                }
                xs.clone()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaConfig {
    /// Normalized boresight offset of every link end.
    pub theta_init: f64,
    /// Variance of the Gaussian angle deviation of each UAV.
    pub sigma2: f64,
    pub g_min_db: f64,
    pub sections: usize,
    pub gain_model: GainModel,
}

impl Default for AntennaConfig {
    fn default() -> Self {
        Self {
            theta_init: 0.0,
            sigma2: 0.1,
            g_min_db: -2.0,
            sections: 16,
            gain_model: GainModel::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub bw_up_hz: f64,
    pub bw_down_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub pkt_local_kbytes: f64,
    pub pkt_global_kbytes: f64,
    pub rician_k: f64,
    pub pathloss_exp: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            bw_up_hz: 1e6,
            bw_down_hz: 1e6,
            noise_psd_dbm_hz: -174.0,
            pkt_local_kbytes: 10.0,
            pkt_global_kbytes: 10.0,
            rician_k: 10.0,
            pathloss_exp: 2.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfererConfig {
    pub distance_m: f64,
    /// Transmit power; defaults to `p_max_w`.
    #[serde(default)]
    pub power_w: Option<f64>,
    /// Linear antenna gain product; defaults to the side-lobe gain squared.
    #[serde(default)]
    pub gain_product: Option<f64>,
    pub active_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterferenceConfig {
    pub uplink: Option<Vec<InterfererConfig>>,
    pub downlink: Option<Vec<InterfererConfig>>,
}

fn default_interferers() -> Vec<InterfererConfig> {
    [300.0, 400.0, 500.0]
        .iter()
        .map(|&d| InterfererConfig {
            distance_m: d,
            power_w: None,
            gain_product: None,
            active_prob: 0.5,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComputeConfig {
    pub kappa: f64,
    pub cycles_per_bit: f64,
    pub cpu_freq_hz: f64,
}

impl Default for ComputeConfig {
    fn default() -> Self {
        Self {
            kappa: 1e-28,
            cycles_per_bit: 1e3,
            cpu_freq_hz: 1e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlightConfig {
    pub rotors: u32,
    pub rotor_diameter_m: f64,
    pub air_density: f64,
    pub efficiency: f64,
    pub mass_kg: f64,
    pub gravity: f64,
    pub v_max: f64,
}

impl Default for FlightConfig {
    fn default() -> Self {
        Self {
            rotors: 4,
            rotor_diameter_m: 0.254,
            air_density: 1.225,
            efficiency: 0.7,
            mass_kg: 2.0,
            gravity: 9.81,
            v_max: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub e_bar_j: f64,
    pub xi_leader: f64,
    pub xi_follower: PerFollower,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            e_bar_j: 7000.0,
            xi_leader: 0.9,
            xi_follower: PerFollower::Uniform(0.9),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub tau_s: PerFollower,
    pub xi_control: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            tau_s: PerFollower::Uniform(0.08),
            xi_control: 0.9,
        }
    }
}

/// Synthetic regression data held by the followers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub samples_per_follower: usize,
    pub dim: usize,
    pub noise_std: f64,
    /// Feature coordinate `j` has standard deviation `feature_decay^j`.
    pub feature_decay: f64,
    /// Size of one raw training sample, used for training energy.
    pub sample_bits: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            samples_per_follower: 40,
            dim: 5,
            noise_std: 0.1,
            feature_decay: 0.7,
            sample_bits: 8e4,
        }
    }
}

/// The on-disk scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_followers: usize,
    /// Follower `i` (1-based) sits `i * follower_spacing_m` from the leader
    /// unless `distances_m` is given.
    pub follower_spacing_m: f64,
    pub distances_m: Option<Vec<f64>>,
    pub p_max_w: f64,
    pub round_time_s: f64,
    pub antenna: AntennaConfig,
    pub radio: RadioConfig,
    pub interference: InterferenceConfig,
    pub compute: ComputeConfig,
    pub flight: FlightConfig,
    pub energy: EnergyConfig,
    pub control: ControlConfig,
    pub dataset: DatasetConfig,
    /// Convergence thresholds as fractions of the initial mean loss.
    pub eps_fractions: Vec<f64>,
    pub samples_k: usize,
    pub mc_runs: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_followers: 5,
            follower_spacing_m: 40.0,
            distances_m: None,
            p_max_w: 0.5,
            round_time_s: 0.1,
            antenna: AntennaConfig::default(),
            radio: RadioConfig::default(),
            interference: InterferenceConfig::default(),
            compute: ComputeConfig::default(),
            flight: FlightConfig::default(),
            energy: EnergyConfig::default(),
            control: ControlConfig::default(),
            dataset: DatasetConfig::default(),
            eps_fractions: vec![0.005, 0.010, 0.015, 0.020, 0.025],
            samples_k: 1000,
            mc_runs: 100,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    /// Makes every implicit default explicit so that the serialized form is
    /// self-describing.
    pub fn filled(&self) -> Self {
        let mut c = self.clone();
        if c.distances_m.is_none() {
            c.distances_m = Some(
                (1..=c.n_followers)
                    .map(|i| i as f64 * c.follower_spacing_m)
                    .collect(),
            );
        }
        let g_min = db_to_linear(c.antenna.g_min_db);
        let fill = |list: &Option<Vec<InterfererConfig>>| {
            list.clone()
                .unwrap_or_else(default_interferers)
                .into_iter()
                .map(|mut k| {
                    k.power_w.get_or_insert(c.p_max_w);
                    k.gain_product.get_or_insert(g_min * g_min);
                    k
                })
                .collect::<Vec<_>>()
        };
        c.interference.uplink = Some(fill(&c.interference.uplink));
        c.interference.downlink = Some(fill(&c.interference.downlink));
        c
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a noise spectral density in dBm/Hz into W/Hz.
pub fn dbm_per_hz_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

/// Synthetic dataset parameters in internal units.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub samples_per_follower: usize,
    pub dim: usize,
    pub noise_std: f64,
    pub feature_decay: f64,
    pub sample_bits: f64,
}

/// A validated swarm scenario in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmScenario {
    /// The filled configuration this scenario was built from.
    pub config: ScenarioConfig,
    pub n_followers: usize,
    /// Leader-follower distance per follower (m).
    pub distances: Vec<f64>,
    pub pathloss_exp: f64,
    pub p_max: f64,
    pub round_time: f64,
    pub antenna: AntennaPattern,
    pub gain_model: GainModel,
    pub radio: RadioParams,
    pub interference: InterferenceField,
    pub compute: ComputeParams,
    pub flight: FlightParams,
    pub budget: EnergyBudget,
    pub control: ControlRequirements,
    pub dataset: DatasetSpec,
    pub eps_fractions: Vec<f64>,
    pub samples_k: usize,
    pub mc_runs: usize,
    pub seed: u64,
}

impl Default for SwarmScenario {
    fn default() -> Self {
        Self::from_config(&ScenarioConfig::default()).expect("default scenario is valid")
    }
}

impl SwarmScenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ScenarioConfig = serde_json::from_str(text)?;
        Self::from_config(&config)
    }

    /// Serializes the filled configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.config).expect("config is serializable")
    }

    /// Returns a copy with `edit` applied to the configuration, revalidated.
    pub fn with(&self, edit: impl FnOnce(&mut ScenarioConfig)) -> Result<Self> {
        let mut config = self.config.clone();
        edit(&mut config);
        Self::from_config(&config)
    }

    pub fn with_sigma2(&self, sigma2: f64) -> Result<Self> {
        self.with(|c| c.antenna.sigma2 = sigma2)
    }

    /// Sets both uplink and downlink bandwidth.
    pub fn with_bandwidth(&self, hz: f64) -> Result<Self> {
        self.with(|c| {
            c.radio.bw_up_hz = hz;
            c.radio.bw_down_hz = hz;
        })
    }

    pub fn from_config(raw: &ScenarioConfig) -> Result<Self> {
        let c = raw.filled();
        let mut errors = Vec::new();
        let mut positive = |field: &str, x: f64| {
            if !(x > 0.0 && x.is_finite()) {
                errors.push(format!("{field}: must be positive and finite (got {x})"));
            }
        };
        positive("p_max_w", c.p_max_w);
        positive("round_time_s", c.round_time_s);
        positive("radio.bw_up_hz", c.radio.bw_up_hz);
        positive("radio.bw_down_hz", c.radio.bw_down_hz);
        positive("radio.pkt_local_kbytes", c.radio.pkt_local_kbytes);
        positive("radio.pkt_global_kbytes", c.radio.pkt_global_kbytes);
        positive("compute.kappa", c.compute.kappa);
        positive("compute.cycles_per_bit", c.compute.cycles_per_bit);
        positive("compute.cpu_freq_hz", c.compute.cpu_freq_hz);
        positive("flight.rotor_diameter_m", c.flight.rotor_diameter_m);
        positive("flight.air_density", c.flight.air_density);
        positive("flight.mass_kg", c.flight.mass_kg);
        positive("flight.gravity", c.flight.gravity);
        positive("flight.v_max", c.flight.v_max);
        positive("energy.e_bar_j", c.energy.e_bar_j);
        positive("dataset.feature_decay", c.dataset.feature_decay);
        positive("dataset.sample_bits", c.dataset.sample_bits);

        if c.n_followers == 0 {
            errors.push("n_followers: must be at least 1".into());
        }
        if !(c.radio.rician_k >= 0.0) {
            errors.push(format!(
                "radio.rician_k: must be >= 0 (got {})",
                c.radio.rician_k
            ));
        }
        if !(c.radio.pathloss_exp >= 2.0 && c.radio.pathloss_exp.is_finite()) {
            errors.push(format!(
                "radio.pathloss_exp: must be >= 2 (got {})",
                c.radio.pathloss_exp
            ));
        }
        if !c.radio.noise_psd_dbm_hz.is_finite() {
            errors.push("radio.noise_psd_dbm_hz: must be finite".into());
        }
        if !(c.antenna.sigma2 >= 0.0 && c.antenna.sigma2.is_finite()) {
            errors.push(format!(
                "antenna.sigma2: must be >= 0 (got {})",
                c.antenna.sigma2
            ));
        }
        let g_min = db_to_linear(c.antenna.g_min_db);
        if !(g_min > 0.0 && g_min <= 1.0) {
            errors.push(format!(
                "antenna.g_min_db: must be <= 0 dB (got {})",
                c.antenna.g_min_db
            ));
        }
        if c.antenna.sections == 0 {
            errors.push("antenna.sections: must be at least 1".into());
        }
        if !c.antenna.theta_init.is_finite() {
            errors.push("antenna.theta_init: must be finite".into());
        }
        if !(c.flight.efficiency > 0.0 && c.flight.efficiency <= 1.0) {
            errors.push(format!(
                "flight.efficiency: must lie in (0, 1] (got {})",
                c.flight.efficiency
            ));
        }
        if c.flight.rotors == 0 {
            errors.push("flight.rotors: must be at least 1".into());
        }
        let unit_open = |x: f64| x > 0.0 && x < 1.0;
        if !unit_open(c.energy.xi_leader) {
            errors.push(format!(
                "energy.xi_leader: must lie in (0, 1) (got {})",
                c.energy.xi_leader
            ));
        }
        if !unit_open(c.control.xi_control) {
            errors.push(format!(
                "control.xi_control: must lie in (0, 1) (got {})",
                c.control.xi_control
            ));
        }
        let n = c.n_followers;
        let xi_follower = c
            .energy
            .xi_follower
            .resolve(n, "energy.xi_follower", &mut errors);
        if xi_follower.iter().any(|&x| !unit_open(x)) {
            errors.push("energy.xi_follower: every value must lie in (0, 1)".into());
        }
        let tau = c.control.tau_s.resolve(n, "control.tau_s", &mut errors);
        if tau.iter().any(|&t| !(t > 0.0)) {
            errors.push("control.tau_s: every value must be positive".into());
        }
        let distances = c.distances_m.clone().unwrap_or_default();
        if distances.len() != n {
            errors.push(format!(
                "distances_m: expected {n} values, got {}",
                distances.len()
            ));
        }
        if distances.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            errors.push("distances_m: every distance must be positive".into());
        }
        let mut interferers = |list: &Option<Vec<InterfererConfig>>, field: &str| {
            list.as_deref()
                .unwrap_or_default()
                .iter()
                .enumerate()
                .map(|(k, cfg)| {
                    let power = cfg.power_w.unwrap_or(c.p_max_w);
                    let gain = cfg.gain_product.unwrap_or(g_min * g_min);
                    if !(cfg.distance_m > 0.0) {
                        errors.push(format!("{field}[{k}].distance_m: must be positive"));
                    }
                    if !(power >= 0.0) {
                        errors.push(format!("{field}[{k}].power_w: must be >= 0"));
                    }
                    if !(gain >= 0.0) {
                        errors.push(format!("{field}[{k}].gain_product: must be >= 0"));
                    }
                    if !(0.0..=1.0).contains(&cfg.active_prob) {
                        errors.push(format!("{field}[{k}].active_prob: must lie in [0, 1]"));
                    }
                    Interferer {
                        distance: cfg.distance_m,
                        power,
                        gain_product: gain,
                        active_prob: cfg.active_prob,
                    }
                })
                .collect::<Vec<_>>()
        };
        let uplink = interferers(&c.interference.uplink, "interference.uplink");
        let downlink = interferers(&c.interference.downlink, "interference.downlink");

        if !(c.dataset.noise_std >= 0.0 && c.dataset.noise_std.is_finite()) {
            errors.push(format!(
                "dataset.noise_std: must be >= 0 (got {})",
                c.dataset.noise_std
            ));
        }
        if c.dataset.dim == 0 {
            errors.push("dataset.dim: must be at least 1".into());
        }
        if c.dataset.samples_per_follower < c.dataset.dim {
            errors.push(format!(
                "dataset.samples_per_follower: must be >= dataset.dim ({})",
                c.dataset.dim
            ));
        }
        if c.eps_fractions.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            errors.push("eps_fractions: every value must lie in (0, 1)".into());
        }
        if c.samples_k == 0 {
            errors.push("samples_k: must be at least 1".into());
        }
        if c.mc_runs == 0 {
            errors.push("mc_runs: must be at least 1".into());
        }
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }

        Ok(Self {
            n_followers: n,
            distances,
            pathloss_exp: c.radio.pathloss_exp,
            p_max: c.p_max_w,
            round_time: c.round_time_s,
            antenna: AntennaPattern {
                theta_init: c.antenna.theta_init,
                sigma2: c.antenna.sigma2,
                g_min,
                sections: c.antenna.sections,
            },
            gain_model: c.antenna.gain_model,
            radio: RadioParams {
                bw_up: c.radio.bw_up_hz,
                bw_down: c.radio.bw_down_hz,
                noise_psd: dbm_per_hz_to_watts(c.radio.noise_psd_dbm_hz),
                pkt_local: c.radio.pkt_local_kbytes * 8000.0,
                pkt_global: c.radio.pkt_global_kbytes * 8000.0,
                rician_k: c.radio.rician_k,
            },
            interference: InterferenceField { uplink, downlink },
            compute: ComputeParams {
                kappa: c.compute.kappa,
                cycles_per_bit: c.compute.cycles_per_bit,
                cpu_freq: c.compute.cpu_freq_hz,
            },
            flight: FlightParams {
                rotors: c.flight.rotors,
                rotor_diameter: c.flight.rotor_diameter_m,
                air_density: c.flight.air_density,
                efficiency: c.flight.efficiency,
                mass: c.flight.mass_kg,
                gravity: c.flight.gravity,
                v_max: c.flight.v_max,
            },
            budget: EnergyBudget {
                e_bar: c.energy.e_bar_j,
                xi_leader: c.energy.xi_leader,
                xi_follower,
            },
            control: ControlRequirements {
                tau,
                xi_control: c.control.xi_control,
            },
            dataset: DatasetSpec {
                samples_per_follower: c.dataset.samples_per_follower,
                dim: c.dataset.dim,
                noise_std: c.dataset.noise_std,
                feature_decay: c.dataset.feature_decay,
                sample_bits: c.dataset.sample_bits,
            },
            eps_fractions: c.eps_fractions.clone(),
            samples_k: c.samples_k,
            mc_runs: c.mc_runs,
            seed: c.seed,
            config: c,
        })
    }
}
