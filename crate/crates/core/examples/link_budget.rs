//! Antenna gain, per-link delays and Monte Carlo link reliability.

use swarmfl::channel::{
    downlink_delay, estimate_link_probabilities, sample_channel_draw, uplink_delay, GainModel,
};
use swarmfl::{DesignVector, SwarmScenario};

fn main() -> swarmfl::Result<()> {
    let scenario = SwarmScenario::default();
    let pattern = &scenario.antenna;
    println!("deviation  exact    sectionalized");
    for dev in [0.0, 0.2, 0.4, 0.6, 0.8, 1.2] {
        println!(
            "{dev:9.2}  {:.4}   {:.4}",
            pattern.gain(GainModel::Exact, dev),
            pattern.gain(GainModel::Sectionalized, dev)
        );
    }

    let design = DesignVector::nominal(&scenario);
    let draw = sample_channel_draw(&scenario, 7);
    println!("\none draw at the nominal design:");
    for i in 0..scenario.n_followers {
        println!(
            "follower {i} at {:5.0} m: uplink {:.3} ms, downlink {:.3} ms",
            scenario.distances[i],
            1e3 * uplink_delay(i, &draw, &design, &scenario)?,
            1e3 * downlink_delay(i, &draw, &design, &scenario)?,
        );
    }

    for sigma2 in [0.01, 0.1, 0.2] {
        let s = scenario.with_sigma2(sigma2)?;
        let probs = estimate_link_probabilities(&design, &s, 20_000, 1)?;
        let joint: Vec<String> = probs.joint.iter().map(|p| format!("{p:.3}")).collect();
        println!("sigma2 = {sigma2:<5} P_i = [{}]", joint.join(", "));
    }
    Ok(())
}
