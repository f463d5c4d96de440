//! Predicted convergence round of the nominal design at each loss threshold.

use swarmfl::channel::estimate_link_probabilities;
use swarmfl::convergence::convergence_round;
use swarmfl::experiments::LearningSetup;
use swarmfl::fl::LossModel;
use swarmfl::{DesignVector, SwarmScenario};

fn main() -> swarmfl::Result<()> {
    let scenario = SwarmScenario::default();
    let setup = LearningSetup::new(&scenario)?;
    let c = setup.loss.constants();
    println!(
        "mu = {:.4}, U = {:.4}, zeta1 = {:.4}, zeta2 = {:.4}",
        c.strong_mu, c.lipschitz_u, c.zeta1, c.zeta2
    );
    println!(
        "F(w0) = {:.4}, F(w0) - F* = {:.4}",
        setup.initial_loss, setup.initial_gap
    );

    let design = DesignVector::nominal(&scenario);
    let probs = estimate_link_probabilities(&design, &scenario, 20_000, scenario.seed)?;
    println!("P_i = {:?}", probs.joint);
    for &eps in &setup.epsilons {
        let profile = setup.profile(eps);
        let inputs = profile.inputs(probs.joint.clone());
        println!(
            "eps = {eps:.4}: L0 = {:.2}, phi = {}",
            profile.initial_loss_sum,
            convergence_round(&inputs)?
        );
    }
    Ok(())
}
