//! Predicted against simulated convergence rounds at the nominal design.

use swarmfl::experiments::validate_theorem;
use swarmfl::{DesignVector, SwarmScenario};

fn main() -> swarmfl::Result<()> {
    let scenario = SwarmScenario::default();
    let result = validate_theorem(&scenario, &DesignVector::nominal(&scenario), 50)?;
    println!("epsilon    predicted  empirical (mean ± std)");
    for r in &result.records {
        println!(
            "{:.5}  {:9.0}  {:.2} ± {:.2}",
            r.epsilon, r.predicted_phi, r.empirical_phi_mean, r.empirical_phi_std
        );
    }
    Ok(())
}
