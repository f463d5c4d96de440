//! Predicted convergence speed and convergence round under unreliable links.

use crate::error::{Error, Result};

/// Everything the closed-form prediction depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceInputs {
    /// Per-follower probability that both links meet their windows.
    pub success_prob: Vec<f64>,
    pub counts: Vec<usize>,
    pub mu: f64,
    pub lipschitz_u: f64,
    pub epsilon: f64,
    /// Sum of per-sample losses at the initial model.
    pub initial_loss_sum: f64,
}

impl ConvergenceInputs {
    fn check(&self) -> Result<()> {
        if self.success_prob.len() != self.counts.len() {
            return Err(Error::InvalidInput(format!(
                "{} success probabilities for {} followers",
                self.success_prob.len(),
                self.counts.len()
            )));
        }
        if self.counts.iter().sum::<usize>() == 0 {
            return Err(Error::InvalidInput("total sample count is zero".into()));
        }
        if self.success_prob.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidInput(
                "success probabilities must lie in [0, 1]".into(),
            ));
        }
        if !(self.mu > 0.0 && self.mu <= self.lipschitz_u) {
            return Err(Error::InvalidInput(format!(
                "need 0 < mu <= U (mu = {}, U = {})",
                self.mu, self.lipschitz_u
            )));
        }
        Ok(())
    }
}

/// The learning-side constants of a prediction, waiting for link probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningProfile {
    pub counts: Vec<usize>,
    pub mu: f64,
    pub lipschitz_u: f64,
    pub epsilon: f64,
    pub initial_loss_sum: f64,
}

impl LearningProfile {
    pub fn inputs(&self, success_prob: Vec<f64>) -> ConvergenceInputs {
        ConvergenceInputs {
            success_prob,
            counts: self.counts.clone(),
            mu: self.mu,
            lipschitz_u: self.lipschitz_u,
            epsilon: self.epsilon,
            initial_loss_sum: self.initial_loss_sum,
        }
    }

    pub fn total_count(&self) -> f64 {
        self.counts.iter().sum::<usize>() as f64
    }

    /// Real-valued convergence round for a given `Σ N_i P_i`, or infinity
    /// when nothing gets through.
    pub fn rounds_for_weighted_success(&self, weighted_success: f64) -> f64 {
        let rho = speed_from_weighted(
            weighted_success,
            self.total_count(),
            self.mu / self.lipschitz_u,
        );
        rounds_for_speed(rho, self.epsilon / self.initial_loss_sum).unwrap_or(f64::INFINITY)
    }
}

/// `ρ = Σ N_i P_i μ / (N U)`.
pub fn convergence_speed(inputs: &ConvergenceInputs) -> Result<f64> {
    inputs.check()?;
    Ok(speed_from_weighted(
        inputs
            .counts
            .iter()
            .zip(&inputs.success_prob)
            .map(|(&n, &p)| n as f64 * p)
            .sum(),
        inputs.counts.iter().sum::<usize>() as f64,
        inputs.mu / inputs.lipschitz_u,
    ))
}

fn speed_from_weighted(weighted_success: f64, total: f64, condition: f64) -> f64 {
    weighted_success / total * condition
}

/// `⌈ln(ε / L₀) / ln(1 - ρ)⌉`, clamped below at zero.
pub fn convergence_round(inputs: &ConvergenceInputs) -> Result<u64> {
    let rho = convergence_speed(inputs)?;
    if !(inputs.epsilon > 0.0 && inputs.initial_loss_sum > 0.0) {
        return Err(Error::InvalidInput(
            "epsilon and the initial loss sum must be positive".into(),
        ));
    }
    Ok(rounds_for_speed(rho, inputs.epsilon / inputs.initial_loss_sum)?.ceil() as u64)
}

/// Real-valued convergence round before rounding up, clamped at zero.
///
/// Fails for `ρ <= 0`, where no finite number of rounds suffices, and for
/// `ρ >= 1`, which is outside the model.
pub fn rounds_for_speed(rho: f64, ratio: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::Divergent { rho });
    }
    if rho >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "convergence speed {rho} must be < 1"
        )));
    }
    Ok((ratio.ln() / (-rho).ln_1p()).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inputs(
        p: Vec<f64>,
        counts: Vec<usize>,
        mu: f64,
        u: f64,
        eps: f64,
        l0: f64,
    ) -> ConvergenceInputs {
        ConvergenceInputs {
            success_prob: p,
            counts,
            mu,
            lipschitz_u: u,
            epsilon: eps,
            initial_loss_sum: l0,
        }
    }

    #[test]
    fn speed_examples() {
        let full = inputs(vec![1.0; 3], vec![5, 7, 9], 0.3, 1.5, 1.0, 10.0);
        assert!((convergence_speed(&full).unwrap() - 0.2).abs() < 1e-15);
        let none = inputs(vec![0.0; 3], vec![5, 7, 9], 0.3, 1.5, 1.0, 10.0);
        assert_eq!(convergence_speed(&none).unwrap(), 0.0);
        let mixed = inputs(vec![0.5, 1.0], vec![10, 30], 0.2, 1.0, 1.0, 10.0);
        assert!((convergence_speed(&mixed).unwrap() - 0.175).abs() < 1e-15);
    }

    #[test]
    fn round_examples() {
        // ρ = 0.5 with a single follower and μ/U = 0.5.
        let half = inputs(vec![1.0], vec![1], 0.5, 1.0, 0.25, 1.0);
        assert_eq!(convergence_round(&half).unwrap(), 2);
        let done = inputs(vec![1.0], vec![1], 0.5, 1.0, 3.0, 3.0);
        assert_eq!(convergence_round(&done).unwrap(), 0);
        let slow = inputs(vec![1.0], vec![1], 0.1, 1.0, 0.01, 1.0);
        assert_eq!(convergence_round(&slow).unwrap(), 44);
        let loose = inputs(vec![1.0], vec![1], 0.1, 1.0, 5.0, 1.0);
        assert_eq!(convergence_round(&loose).unwrap(), 0);
    }

    #[test]
    fn dead_links_diverge() {
        let dead = inputs(vec![0.0, 0.0], vec![3, 4], 0.5, 1.0, 0.1, 1.0);
        assert!(matches!(
            convergence_round(&dead),
            Err(Error::Divergent { .. })
        ));
        assert!(rounds_for_speed(1.0, 0.5).is_err());
    }

    #[test]
    fn invalid_constants_are_rejected() {
        assert!(convergence_speed(&inputs(vec![1.0], vec![1], 2.0, 1.0, 0.1, 1.0)).is_err());
        assert!(convergence_speed(&inputs(vec![1.5], vec![1], 0.5, 1.0, 0.1, 1.0)).is_err());
        assert!(convergence_speed(&inputs(vec![1.0], vec![0], 0.5, 1.0, 0.1, 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn round_is_monotone(
            p in proptest::collection::vec(0.05f64..1.0, 3),
            bump in 0.0f64..0.5,
            idx in 0usize..3,
            mu_frac in 0.01f64..1.0,
            e1 in 1e-4f64..1.0,
            e2 in 1e-4f64..1.0,
        ) {
            let base = inputs(p.clone(), vec![10, 20, 30], mu_frac, 1.0, e1.min(e2), 1.0);
            let phi = convergence_round(&base).unwrap();

            let looser = ConvergenceInputs { epsilon: e1.max(e2), ..base.clone() };
            prop_assert!(convergence_round(&looser).unwrap() <= phi);

            let mut better = base.clone();
            better.success_prob[idx] = (better.success_prob[idx] + bump).min(1.0);
            prop_assert!(convergence_round(&better).unwrap() <= phi);

            let stronger = ConvergenceInputs { mu: (mu_frac * 1.5).min(1.0), ..base.clone() };
            prop_assert!(convergence_round(&stronger).unwrap() <= phi);

            let rougher = ConvergenceInputs { lipschitz_u: 1.7, ..base.clone() };
            prop_assert!(convergence_round(&rougher).unwrap() >= phi);
        }

        #[test]
        fn more_weighted_success_strictly_lowers_real_rounds(
            p in 0.05f64..0.9, bump in 0.01f64..0.1, ratio in 1e-4f64..0.3,
        ) {
            let r1 = rounds_for_speed(p * 0.2, ratio).unwrap();
            let r2 = rounds_for_speed((p + bump) * 0.2, ratio).unwrap();
            prop_assert!(r2 < r1);
        }
    }
}
