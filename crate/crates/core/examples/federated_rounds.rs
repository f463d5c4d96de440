//! Federated training over lossy links compared with perfect links.

use nalgebra::DVector;
use swarmfl::experiments::LearningSetup;
use swarmfl::fl::{first_crossing, perfect_links, run_fl, run_rounds, FlState, LossModel};
use swarmfl::{DesignVector, SwarmScenario};

fn main() -> swarmfl::Result<()> {
    let scenario = SwarmScenario::default();
    let setup = LearningSetup::new(&scenario)?;
    let eps = setup.design_epsilon();
    let design = DesignVector::nominal(&scenario);

    let (lossy, hit) = run_fl(
        &scenario,
        &design,
        &setup.loss,
        &setup.datasets,
        200,
        eps,
        11,
    )?;
    println!("lossy links reach eps = {eps:.4} at round {hit:?}");

    let w0 = DVector::zeros(scenario.dataset.dim);
    let mut ideal = FlState::new(w0, &setup.loss, &setup.datasets);
    let lr = 1.0 / setup.loss.constants().lipschitz_u;
    run_rounds(
        &mut ideal,
        &setup.loss,
        &setup.datasets,
        lr,
        200,
        eps,
        |_| perfect_links(scenario.n_followers),
    );
    println!(
        "perfect links reach it at round {:?}",
        first_crossing(&ideal.gap_history, eps)
    );

    println!("round  gap (lossy)  participants");
    for (t, (gap, part)) in lossy
        .gap_history
        .iter()
        .zip(&lossy.participation_history)
        .enumerate()
        .take(10)
    {
        println!("{t:5}  {gap:11.5}  {part:?}");
    }
    Ok(())
}
