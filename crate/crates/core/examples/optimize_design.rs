//! Joint design of transmit powers, scheduling and speed.

use swarmfl::experiments::optimize;
use swarmfl::saa::{DualMethod, SolverConfig};
use swarmfl::SwarmScenario;

fn main() -> swarmfl::Result<()> {
    let scenario = SwarmScenario::default().with(|c| c.samples_k = 200)?;
    for method in [DualMethod::Subgradient, DualMethod::Ellipsoid] {
        let config = SolverConfig {
            method,
            ..SolverConfig::default()
        };
        let (solution, _) = optimize(&scenario, &config)?;
        let d = &solution.design;
        println!(
            "{method:?}: {} dual iterations",
            solution.report.trace.len()
        );
        println!(
            "  p = {:?}\n  p_L = {:.4}, beta = {:.4}, v = {:.3}",
            d.p, d.p_leader, d.beta, d.v
        );
        println!(
            "  predicted round {}, P_i = {:?}",
            solution.predicted_round, solution.success_prob
        );
        println!("  margins {:?}", solution.report.final_margins);
    }
    Ok(())
}
