//! Convergence rounds against antenna jitter and bandwidth.

use swarmfl::experiments::{sweep_sigma, DEFAULT_BANDWIDTHS, DEFAULT_SIGMA2};
use swarmfl::{DesignVector, SwarmScenario};

fn main() -> swarmfl::Result<()> {
    let scenario = SwarmScenario::default();
    let design = DesignVector::nominal(&scenario);
    let result = sweep_sigma(&scenario, &design, &DEFAULT_SIGMA2, &DEFAULT_BANDWIDTHS, 20)?;
    let eps = scenario.eps_fractions[0];
    println!("bandwidth  sigma2  predicted  empirical   (eps fraction {eps})");
    for r in result.records.iter().filter(|r| r.eps_fraction == eps) {
        println!(
            "{:7.0e}  {:6.2}  {:9.0}  {:9.2}",
            r.bandwidth_hz, r.sigma2, r.predicted_phi, r.empirical_phi_mean
        );
    }
    Ok(())
}
