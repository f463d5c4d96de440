//! Federated learning over a leader/follower UAV swarm.
//!
//! The crate is organized around the pieces of the system:
//!
//! - [`channel`]: directional antenna gains under angle jitter, Rician fading,
//!   SINR and per-round uplink/downlink delays, Monte Carlo link success.
//! - [`energy`]: training, transmission and flight energy, including the
//!   induced-velocity fixed point behind rotor power.
//! - [`fl`]: local gradient steps, ideal and delay-gated aggregation, and full
//!   federated training runs over synthetic regression data.
//! - [`convergence`]: closed-form convergence speed and predicted convergence
//!   round from link success probabilities.
//! - [`saa`]: the chance-constrained power/scheduling/speed design solved by
//!   sample average approximation, sigmoid smoothing and a Lagrangian dual method.
//! - [`scenario`] and [`experiments`]: JSON configuration and the experiment
//!   harness that emits tidy CSV.
//!
//! Everything random is driven by explicit `u64` seeds; identical inputs give
//! bit-identical outputs.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod convergence;
pub mod design;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod fl;
pub mod saa;
pub mod scenario;
pub mod seed;

pub use design::DesignVector;
pub use error::{Error, Result};
pub use scenario::SwarmScenario;
