//! Induced velocity, propulsion power and per-round energy against speed.

use swarmfl::energy::{flight_power, induced_velocity, round_energy, Role};
use swarmfl::{DesignVector, SwarmScenario};

fn main() -> swarmfl::Result<()> {
    let scenario = SwarmScenario::default();
    let flight = &scenario.flight;
    println!(
        "hover induced velocity {:.4} m/s",
        flight.hover_induced_velocity()
    );
    println!("  v (m/s)  v_i (m/s)  power (W)");
    for v in (0..=20).step_by(4) {
        let v = v as f64;
        println!(
            "{v:9.1}  {:9.4}  {:9.2}",
            induced_velocity(flight, v)?,
            flight_power(flight, v)?
        );
    }

    let design = DesignVector::nominal(&scenario);
    let leader = round_energy(Role::Leader, &design, 0.0, &scenario)?;
    let follower = round_energy(Role::Follower(0), &design, 3e-3, &scenario)?;
    println!(
        "\nper-round energy at v = {} m/s: leader {leader:.3} J, follower 0 {follower:.3} J",
        design.v
    );
    println!(
        "budget {} J covers about {:.0} leader rounds",
        scenario.budget.e_bar,
        scenario.budget.e_bar / leader
    );
    Ok(())
}
