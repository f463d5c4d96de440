//! Frozen channel samples for the sample average approximation.

use crate::channel::{ChannelDraw, LinkState};
use crate::error::{Error, Result};
use crate::scenario::SwarmScenario;
use crate::seed;

/// `K` joint channel draws and their per-watt SINRs, fixed for a whole solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSamples {
    pub draws: Vec<ChannelDraw>,
    pub links: Vec<LinkState>,
}

impl ScenarioSamples {
    pub fn generate(scenario: &SwarmScenario, k: usize, rng_seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("need at least one sample".into()));
        }
        let mut rng = seed::rng(rng_seed);
        let draws: Vec<ChannelDraw> = (0..k)
            .map(|_| ChannelDraw::sample(scenario, &mut rng))
            .collect();
        let links = draws
            .iter()
            .map(|d| LinkState::from_draw(scenario, d))
            .collect();
        Ok(Self { draws, links })
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }
}
