//! Maximization of the Lagrangian over the design box.

use crate::design::DesignVector;
use crate::error::Result;

use super::problem::{lagrangian_value, DelayTable, SaaProblem};

/// Tolerances of the cyclic coordinate ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerConfig {
    /// Stop once a full cycle improves `J` by less than this, relatively.
    pub rel_tol: f64,
    pub max_cycles: usize,
    /// Golden-section search stops at this fraction of the coordinate range.
    pub line_tol: f64,
    /// Coordinates stay within `[δ·hi, (1-δ)·hi]` so the box is respected
    /// strictly.
    pub box_margin: f64,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            max_cycles: 50,
            line_tol: 1e-5,
            box_margin: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub design: DesignVector,
    /// `D(λ)`, the Lagrangian at `design`.
    pub value: f64,
    pub cycles: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    FollowerPower(usize),
    LeaderPower,
    Beta,
    Speed,
}

impl Coordinate {
    pub fn all(n_followers: usize) -> Vec<Self> {
        (0..n_followers)
            .map(Coordinate::FollowerPower)
            .chain([Coordinate::LeaderPower, Coordinate::Beta, Coordinate::Speed])
            .collect()
    }

    pub fn get(self, d: &DesignVector) -> f64 {
        match self {
            Coordinate::FollowerPower(i) => d.p[i],
            Coordinate::LeaderPower => d.p_leader,
            Coordinate::Beta => d.beta,
            Coordinate::Speed => d.v,
        }
    }

    pub fn set(self, d: &mut DesignVector, x: f64) {
        match self {
            Coordinate::FollowerPower(i) => d.p[i] = x,
            Coordinate::LeaderPower => d.p_leader = x,
            Coordinate::Beta => d.beta = x,
            Coordinate::Speed => d.v = x,
        }
    }

    /// Interior interval of the coordinate.
    pub fn bounds(self, problem: &SaaProblem, margin: f64) -> (f64, f64) {
        let hi = match self {
            Coordinate::FollowerPower(_) | Coordinate::LeaderPower => problem.scenario.p_max,
            Coordinate::Beta => 1.0,
            Coordinate::Speed => problem.scenario.flight.v_max,
        };
        (margin * hi, (1.0 - margin) * hi)
    }
}

/// Lagrangian restricted to one coordinate, keeping the delay table in sync.
struct Line<'a> {
    problem: &'a SaaProblem,
    lambda: &'a [f64],
    design: DesignVector,
    delays: DelayTable,
}

impl Line<'_> {
    fn move_to(&mut self, c: Coordinate, x: f64) {
        c.set(&mut self.design, x);
        match c {
            Coordinate::FollowerPower(i) => self.problem.set_follower_power(&mut self.delays, i, x),
            Coordinate::LeaderPower => self.problem.set_leader_power(&mut self.delays, x),
            Coordinate::Beta | Coordinate::Speed => {}
        }
    }

    fn value(&self) -> Result<f64> {
        let eval = self.problem.evaluate_with(&self.design, &self.delays)?;
        Ok(lagrangian_value(&eval, self.lambda))
    }

    fn value_at(&mut self, c: Coordinate, x: f64) -> Result<f64> {
        self.move_to(c, x);
        self.value()
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of `f` on `[lo, hi]`; returns the
/// best point evaluated and its value.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
            if f1 > best.1 {
                best = (x1, f1);
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
            if f2 > best.1 {
                best = (x2, f2);
            }
        }
    }
    // Monotone objectives push the optimum onto an end point.
    for end in [lo, hi] {
        let v = f(end)?;
        if v > best.1 {
            best = (end, v);
        }
    }
    Ok(best)
}

/// Cyclic coordinate ascent of `J(λ, ·)` from `init`, one golden-section
/// search per coordinate. A coordinate only moves when that raises `J`, so
/// the returned value is never below `J(λ, init)` clamped into the box.
pub fn inner_maximize(
    problem: &SaaProblem,
    lambda: &[f64],
    init: &DesignVector,
    config: &InnerConfig,
) -> Result<InnerResult> {
    let coords = Coordinate::all(problem.n_followers());
    let mut design = init.clone();
    for &c in &coords {
        let (lo, hi) = c.bounds(problem, config.box_margin);
        let x = c.get(&design).clamp(lo, hi);
        c.set(&mut design, x);
    }
    let delays = problem.delays(&design);
    let mut line = Line {
        problem,
        lambda,
        design,
        delays,
    };
    let mut value = line.value()?;
    let mut cycles = 0;
    while cycles < config.max_cycles {
        cycles += 1;
        let start = value;
        for &c in &coords {
            let (lo, hi) = c.bounds(problem, config.box_margin);
            let current = c.get(&line.design);
            let (x, v) =
                golden_section_max(|x| line.value_at(c, x), lo, hi, config.line_tol * (hi - lo))?;
            if v > value {
                line.move_to(c, x);
                value = v;
            } else {
                line.move_to(c, current);
            }
        }
        if value - start <= config.rel_tol * start.abs().max(1.0) {
            break;
        }
    }
    Ok(InnerResult {
        design: line.design,
        value,
        cycles,
    })
}
