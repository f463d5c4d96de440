//! Joint power, scheduling and speed design.
//!
//! The chance-constrained problem is replaced by averages over `K` frozen
//! channel samples, indicators are smoothed by a sigmoid, and the smoothed
//! problem is attacked through its Lagrangian dual: an inner coordinate ascent
//! over the design box and an outer projected subgradient (or ellipsoid) method
//! over the multipliers. Only designs that satisfy the unsmoothed sample
//! constraints are returned.

mod baseline;
mod dual;
mod inner;
mod problem;
mod samples;
mod smoothing;

pub use baseline::{baseline_design, BaselineKind};
pub use dual::{
    default_step_scale, dual_subgradient, dual_value, solve, DualMethod, DualState, Solution,
    SolveReport, SolverConfig, TraceRow,
};
pub use inner::{golden_section_max, inner_maximize, Coordinate, InnerConfig, InnerResult};
pub use problem::{lagrangian_value, DelayTable, Evaluation, ExactCheck, SaaProblem};
pub use samples::ScenarioSamples;
pub use smoothing::{indicator, sigmoid, SmoothingConfig, DEFAULT_C_BAR};
