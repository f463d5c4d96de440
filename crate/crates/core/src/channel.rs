//! Directional antenna gains, Rician fading, SINR and link delays.
//!
//! Every UAV carries one antenna with a squared-cosine main lobe and a flat
//! side-lobe floor. Each round the swarm sees one [`ChannelDraw`]: a Gaussian
//! orientation error per UAV, a unit-mean Rician power gain per link and an
//! on/off state for each external interferer. Delays follow from the Shannon
//! rate of the resulting SINR.

use std::f64::consts::{FRAC_PI_2, LN_2};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::design::DesignVector;
use crate::error::{Error, Result};
use crate::scenario::SwarmScenario;
use crate::seed;

/// Squared-cosine antenna with a constant side-lobe gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaPattern {
    /// Normalized boresight offset of the link (1.0 is the lobe edge).
    pub theta_init: f64,
    /// Variance of the per-UAV Gaussian angle deviation.
    pub sigma2: f64,
    /// Side-lobe gain, linear.
    pub g_min: f64,
    /// Number of sections of the piecewise-constant approximation.
    pub sections: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainModel {
    #[default]
    Exact,
    Sectionalized,
}

/// `cos²(π a / 2)` inside the main lobe, `g_min` outside.
pub fn antenna_gain_exact(pattern: &AntennaPattern, total_angle: f64) -> f64 {
    if total_angle.abs() <= 1.0 {
        let c = (FRAC_PI_2 * total_angle).cos();
        c * c
    } else {
        pattern.g_min
    }
}

/// Piecewise-constant lobe: section `m = ⌊|a|·M⌋` has gain `cos²(π m / 2M)`.
///
/// Section 0 covers `[0, 1/M)` and has unit gain. `|a| = 1` falls in the last
/// section, so the approximation never drops below `cos²(π (M-1) / 2M)`.
pub fn antenna_gain_sectionalized(pattern: &AntennaPattern, total_angle: f64) -> f64 {
    let a = total_angle.abs();
    if a > 1.0 {
        return pattern.g_min;
    }
    let m_total = pattern.sections.max(1);
    let m = ((a * m_total as f64).floor() as usize).min(m_total - 1);
    let c = (FRAC_PI_2 * m as f64 / m_total as f64).cos();
    c * c
}

impl AntennaPattern {
    pub fn gain(&self, model: GainModel, deviation: f64) -> f64 {
        let angle = self.theta_init + deviation;
        match model {
            GainModel::Exact => antenna_gain_exact(self, angle),
            GainModel::Sectionalized => antenna_gain_sectionalized(self, angle),
        }
    }
}

/// Distance and path-loss exponent of one leader-follower link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub distance: f64,
    pub pathloss_exp: f64,
}

impl LinkGeometry {
    pub fn follower(scenario: &SwarmScenario, i: usize) -> Self {
        Self {
            distance: scenario.distances[i],
            pathloss_exp: scenario.pathloss_exp,
        }
    }

    /// `d^(-α)`
    pub fn path_gain(&self) -> f64 {
        self.distance.powf(-self.pathloss_exp)
    }
}

/// One UAV outside the swarm sharing the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    /// Distance to the victim receiver (m).
    pub distance: f64,
    pub power: f64,
    /// Linear product of the transmit and receive antenna gains.
    pub gain_product: f64,
    pub active_prob: f64,
}

/// Interferers hitting the leader's receiver (`uplink`) and the followers'
/// receivers (`downlink`). Downlink interferers are taken to be at the same
/// distance from every follower.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InterferenceField {
    pub uplink: Vec<Interferer>,
    pub downlink: Vec<Interferer>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    pub bw_up: f64,
    pub bw_down: f64,
    /// Noise power spectral density (W/Hz).
    pub noise_psd: f64,
    /// Size of a local model upload (bits).
    pub pkt_local: f64,
    /// Size of the global model broadcast (bits).
    pub pkt_global: f64,
    /// Rician K-factor, linear. `f64::INFINITY` gives a pure line-of-sight link.
    pub rician_k: f64,
}

/// Samples a unit-mean Rician power gain `|h|²`.
///
/// Always consumes exactly two standard normals, so streams stay aligned
/// across K-factors.
pub fn rician_power_gain<R: Rng + ?Sized>(k_factor: f64, rng: &mut R) -> f64 {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    let (los, scatter) = if k_factor.is_infinite() {
        (1.0, 0.0)
    } else {
        (
            (k_factor / (k_factor + 1.0)).sqrt(),
            (0.5 / (k_factor + 1.0)).sqrt(),
        )
    };
    let re = los + scatter * x;
    let im = scatter * y;
    re * re + im * im
}

/// One joint realization of every random quantity in a round.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    pub leader_dev: f64,
    pub follower_dev: Vec<f64>,
    /// Follower-to-leader power gain per follower.
    pub fading_up: Vec<f64>,
    /// Leader-to-follower power gain per follower.
    pub fading_down: Vec<f64>,
    pub up_interferer_active: Vec<bool>,
    pub up_interferer_fading: Vec<f64>,
    pub down_interferer_active: Vec<bool>,
    /// Indexed `[interferer][follower]`.
    pub down_interferer_fading: Vec<Vec<f64>>,
}

impl ChannelDraw {
    /// Draws a realization from `rng`. The number of variates consumed depends
    /// only on the swarm and interferer counts, never on variances or
    /// K-factors, so equal seeds couple draws across parameter sweeps.
    pub fn sample<R: Rng + ?Sized>(scenario: &SwarmScenario, rng: &mut R) -> Self {
        let n = scenario.n_followers;
        let sigma = scenario.antenna.sigma2.sqrt();
        let k = scenario.radio.rician_k;
        let normal = |rng: &mut R| -> f64 { sigma * rng.sample::<f64, _>(StandardNormal) };
        let leader_dev = normal(rng);
        let follower_dev = (0..n).map(|_| normal(rng)).collect();
        let fading_up = (0..n).map(|_| rician_power_gain(k, rng)).collect();
        let fading_down = (0..n).map(|_| rician_power_gain(k, rng)).collect();
        let mut up_interferer_active = Vec::with_capacity(scenario.interference.uplink.len());
        let mut up_interferer_fading = Vec::with_capacity(scenario.interference.uplink.len());
        for intf in &scenario.interference.uplink {
            up_interferer_active.push(rng.random::<f64>() < intf.active_prob);
            up_interferer_fading.push(rician_power_gain(k, rng));
        }
        let mut down_interferer_active = Vec::with_capacity(scenario.interference.downlink.len());
        let mut down_interferer_fading = Vec::with_capacity(scenario.interference.downlink.len());
        for intf in &scenario.interference.downlink {
            down_interferer_active.push(rng.random::<f64>() < intf.active_prob);
            down_interferer_fading.push((0..n).map(|_| rician_power_gain(k, rng)).collect());
        }
        Self {
            leader_dev,
            follower_dev,
            fading_up,
            fading_down,
            up_interferer_active,
            up_interferer_fading,
            down_interferer_active,
            down_interferer_fading,
        }
    }
}

pub fn sample_channel_draw(scenario: &SwarmScenario, rng_seed: u64) -> ChannelDraw {
    ChannelDraw::sample(scenario, &mut seed::rng(rng_seed))
}

/// SINR per watt of transmit power on every link of one draw.
///
/// Interference is external to the swarm, so the SINR of a link is linear in
/// its own transmit power and this is all a design evaluation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    pub up_sinr_per_watt: Vec<f64>,
    pub down_sinr_per_watt: Vec<f64>,
}

impl LinkState {
    pub fn from_draw(scenario: &SwarmScenario, draw: &ChannelDraw) -> Self {
        let a = &scenario.antenna;
        let model = scenario.gain_model;
        let alpha = scenario.pathloss_exp;
        let g_leader = a.gain(model, draw.leader_dev);

        let up_interference: f64 = scenario
            .interference
            .uplink
            .iter()
            .zip(&draw.up_interferer_active)
            .zip(&draw.up_interferer_fading)
            .filter(|((_, &on), _)| on)
            .map(|((k, _), &h)| k.power * h * k.distance.powf(-alpha) * k.gain_product)
            .sum();
        let up_noise = scenario.radio.bw_up * scenario.radio.noise_psd;
        let down_noise = scenario.radio.bw_down * scenario.radio.noise_psd;

        let mut up = Vec::with_capacity(scenario.n_followers);
        let mut down = Vec::with_capacity(scenario.n_followers);
        for i in 0..scenario.n_followers {
            let path = LinkGeometry::follower(scenario, i).path_gain();
            let gains = a.gain(model, draw.follower_dev[i]) * g_leader;
            up.push(draw.fading_up[i] * path * gains / (up_interference + up_noise));

            let down_interference: f64 = scenario
                .interference
                .downlink
                .iter()
                .zip(&draw.down_interferer_active)
                .zip(&draw.down_interferer_fading)
                .filter(|((_, &on), _)| on)
                .map(|((k, _), h)| k.power * h[i] * k.distance.powf(-alpha) * k.gain_product)
                .sum();
            down.push(draw.fading_down[i] * path * gains / (down_interference + down_noise));
        }
        Self {
            up_sinr_per_watt: up,
            down_sinr_per_watt: down,
        }
    }

    pub fn uplink_delay(&self, scenario: &SwarmScenario, i: usize, power: f64) -> f64 {
        transmission_delay(
            scenario.radio.pkt_local,
            scenario.radio.bw_up,
            power * self.up_sinr_per_watt[i],
        )
    }

    pub fn downlink_delay(&self, scenario: &SwarmScenario, i: usize, power: f64) -> f64 {
        transmission_delay(
            scenario.radio.pkt_global,
            scenario.radio.bw_down,
            power * self.down_sinr_per_watt[i],
        )
    }
}

/// `bits / (B log₂(1 + sinr))`; infinite when the SINR is zero.
pub fn transmission_delay(bits: f64, bandwidth: f64, sinr: f64) -> f64 {
    bits * LN_2 / (bandwidth * sinr.ln_1p())
}

fn check_power(power: f64, scenario: &SwarmScenario, what: &str) -> Result<()> {
    if power > 0.0 && power <= scenario.p_max {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{what} = {power} W outside (0, {}]",
            scenario.p_max
        )))
    }
}

fn check_follower(i: usize, scenario: &SwarmScenario) -> Result<()> {
    if i < scenario.n_followers {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "follower {i} out of range (swarm has {})",
            scenario.n_followers
        )))
    }
}

/// Upload delay of follower `i`'s local model in this draw (s).
pub fn uplink_delay(
    i: usize,
    draw: &ChannelDraw,
    design: &DesignVector,
    scenario: &SwarmScenario,
) -> Result<f64> {
    check_follower(i, scenario)?;
    check_power(design.p[i], scenario, "uplink power")?;
    Ok(LinkState::from_draw(scenario, draw).uplink_delay(scenario, i, design.p[i]))
}

/// Broadcast delay of the global model to follower `i` in this draw (s).
pub fn downlink_delay(
    i: usize,
    draw: &ChannelDraw,
    design: &DesignVector,
    scenario: &SwarmScenario,
) -> Result<f64> {
    check_follower(i, scenario)?;
    check_power(design.p_leader, scenario, "leader power")?;
    Ok(LinkState::from_draw(scenario, draw).downlink_delay(scenario, i, design.p_leader))
}

/// Which links of one round met their windows.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub uplink_ok: Vec<bool>,
    pub downlink_ok: Vec<bool>,
}

impl RoundOutcome {
    pub fn evaluate(scenario: &SwarmScenario, design: &DesignVector, links: &LinkState) -> Self {
        let up_window = design.uplink_window(scenario.round_time);
        let down_window = design.downlink_window(scenario.round_time);
        let n = scenario.n_followers;
        Self {
            uplink_ok: (0..n)
                .map(|i| links.uplink_delay(scenario, i, design.p[i]) <= up_window)
                .collect(),
            downlink_ok: (0..n)
                .map(|i| links.downlink_delay(scenario, i, design.p_leader) <= down_window)
                .collect(),
        }
    }

    /// Follower `i` takes part in the aggregation.
    pub fn participates(&self, i: usize) -> bool {
        self.uplink_ok[i] && self.downlink_ok[i]
    }
}

/// Monte Carlo link reliability per follower.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkProbabilities {
    /// `P(T_iL <= βT_r, T_Li <= (1-β)T_r)`
    pub joint: Vec<f64>,
    pub uplink: Vec<f64>,
    pub downlink: Vec<f64>,
    pub n_samples: usize,
}

/// Estimates every follower's link probabilities from `n_samples` joint draws.
pub fn estimate_link_probabilities(
    design: &DesignVector,
    scenario: &SwarmScenario,
    n_samples: usize,
    rng_seed: u64,
) -> Result<LinkProbabilities> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be at least 1".into()));
    }
    design.validate(scenario)?;
    let n = scenario.n_followers;
    let mut rng = seed::rng(rng_seed);
    let mut joint = vec![0usize; n];
    let mut up = vec![0usize; n];
    let mut down = vec![0usize; n];
    for _ in 0..n_samples {
        let draw = ChannelDraw::sample(scenario, &mut rng);
        let links = LinkState::from_draw(scenario, &draw);
        let outcome = RoundOutcome::evaluate(scenario, design, &links);
        for i in 0..n {
            up[i] += outcome.uplink_ok[i] as usize;
            down[i] += outcome.downlink_ok[i] as usize;
            joint[i] += outcome.participates(i) as usize;
        }
    }
    let freq = |c: Vec<usize>| c.into_iter().map(|x| x as f64 / n_samples as f64).collect();
    Ok(LinkProbabilities {
        joint: freq(joint),
        uplink: freq(up),
        downlink: freq(down),
        n_samples,
    })
}

/// Monte Carlo estimate of follower `i` meeting both delay windows.
pub fn estimate_success_prob(
    i: usize,
    design: &DesignVector,
    scenario: &SwarmScenario,
    n_samples: usize,
    rng_seed: u64,
) -> Result<f64> {
    check_follower(i, scenario)?;
    Ok(estimate_link_probabilities(design, scenario, n_samples, rng_seed)?.joint[i])
}
