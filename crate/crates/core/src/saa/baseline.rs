//! Randomized comparison designs.

use rand::Rng;
use serde::Serialize;

use crate::design::DesignVector;
use crate::scenario::SwarmScenario;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    /// The joint design's powers with a random split of the round.
    PowerOnly,
    /// The joint design's split with random powers.
    SchedulingOnly,
}

impl BaselineKind {
    pub fn label(self) -> &'static str {
        match self {
            BaselineKind::PowerOnly => "power-only",
            BaselineKind::SchedulingOnly => "scheduling-only",
        }
    }
}

/// Draws a baseline derived from `joint`. Speed is always copied.
pub fn baseline_design(
    kind: BaselineKind,
    joint: &DesignVector,
    scenario: &SwarmScenario,
    rng_seed: u64,
) -> DesignVector {
    let mut rng = seed::rng(rng_seed);
    // `1 - U[0, 1)` lies in (0, 1].
    let mut unit = || 1.0 - rng.random::<f64>();
    let mut d = joint.clone();
    match kind {
        BaselineKind::PowerOnly => {
            let mut beta = unit();
            while beta >= 1.0 {
                beta = unit();
            }
            d.beta = beta;
        }
        BaselineKind::SchedulingOnly => {
            for p in &mut d.p {
                *p = scenario.p_max * unit();
            }
            d.p_leader = scenario.p_max * unit();
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn copies_the_fixed_part() {
        let s = SwarmScenario::default();
        let mut joint = DesignVector::center(&s);
        joint.p[2] = 0.37;
        joint.beta = 0.42;
        for seed in 0..50 {
            let a = baseline_design(BaselineKind::PowerOnly, &joint, &s, seed);
            assert_eq!(a.p, joint.p);
            assert_eq!(a.p_leader, joint.p_leader);
            assert_eq!(a.v, joint.v);
            assert!(a.validate(&s).is_ok());

            let b = baseline_design(BaselineKind::SchedulingOnly, &joint, &s, seed);
            assert_eq!(b.beta, joint.beta);
            assert_eq!(b.v, joint.v);
            assert!(b.validate(&s).is_ok());
        }
    }
}
