//! Prints the fully expanded default scenario, then loads a one-line override.

use swarmfl::SwarmScenario;

fn main() -> swarmfl::Result<()> {
    println!("{}", SwarmScenario::default().to_json());
    let custom = SwarmScenario::from_json(r#"{"n_followers": 3, "radio": {"bw_up_hz": 2e6}}"#)?;
    eprintln!(
        "custom: {} followers at {:?} m, uplink {} Hz",
        custom.n_followers, custom.distances, custom.radio.bw_up
    );
    Ok(())
}
