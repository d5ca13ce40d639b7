//! Open-loop trot on seeded rough terrain: the brittleness baseline.
//!
//! Runs the unaugmented gait over a batch of maximum-roughness fields and
//! reports how many trials end in a fall before the near-distance mark.
//!
//!     cargo run --release -p quadgait --example open_loop_rough

use quadgait::randomization::D2Distribution;
use quadgait::rollout::{episode_rollout, EpisodeParams, PolicySource};

fn main() -> quadgait::Result<()> {
    let params = EpisodeParams::default();
    let dist = D2Distribution {
        mesh_magnitude: (0.08, 0.08), // maximum roughness every trial
        mass_spread: 0.0,
        friction: (1.15, 1.15),
        ..D2Distribution::default()
    };

    let trials = 20;
    let max_steps = 2000; // 20 seconds
    let mut failed_near = 0;
    println!("trial  fell   steps  distance");
    for trial in 0..trials {
        let sample = dist.sample(1000 + trial);
        let result = episode_rollout(
            &PolicySource::OpenLoop,
            &sample,
            &params,
            trial,
            max_steps,
            None,
        )?;
        let early_fall = result.fell && result.distance < 5.0;
        if early_fall {
            failed_near += 1;
        }
        println!(
            "{trial:>5}  {:<5}  {:>5}  {:>7.2} m",
            result.fell, result.steps, result.distance
        );
    }
    println!();
    println!(
        "fell before 5 m in {failed_near}/{trials} trials ({:.0}%)",
        100.0 * failed_near as f64 / trials as f64
    );
    Ok(())
}
