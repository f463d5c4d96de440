//! Joint design against power-only and scheduling-only baselines.

use swarmfl::experiments::{compare_designs, DEFAULT_BANDWIDTHS};
use swarmfl::saa::SolverConfig;
use swarmfl::SwarmScenario;

fn main() -> swarmfl::Result<()> {
    let scenario = SwarmScenario::default().with(|c| c.samples_k = 200)?;
    let result = compare_designs(&scenario, &DEFAULT_BANDWIDTHS, 20, &SolverConfig::default())?;
    println!("bandwidth  design           rounds  reduction by joint (%)");
    for r in &result.records {
        println!(
            "{:7.0e}  {:15}  {:6.1}  {:6.1}",
            r.bandwidth_hz, r.design_kind, r.predicted_phi, r.reduction_pct
        );
    }
    Ok(())
}
