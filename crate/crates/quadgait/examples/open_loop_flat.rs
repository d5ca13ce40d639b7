//! Run the unaugmented open-loop trot on flat ground and report progress.
//!
//!     cargo run --release -p quadgait --example open_loop_flat

use quadgait::randomization::D2Distribution;
use quadgait::rollout::{episode_rollout, EpisodeParams, PolicySource, TrajectoryLog};

fn main() -> quadgait::Result<()> {
    let params = EpisodeParams::default();
    let dist = D2Distribution {
        mesh_magnitude: (0.0, 0.0),
        mass_spread: 0.0,
        friction: (1.15, 1.15),
        ..D2Distribution::default()
    };
    let sample = dist.nominal(0);

    let steps: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1000);
    let mut log = TrajectoryLog::default();
    let result = episode_rollout(
        &PolicySource::OpenLoop,
        &sample,
        &params,
        0,
        steps,
        Some(&mut log),
    )?;

    println!("step   time   roll    pitch   reward");
    for row in log.rows.iter().step_by(25) {
        println!(
            "{:>5} {:>6.2} {:>7.3} {:>7.3} {:>8.4}",
            row.step, row.time, row.roll, row.pitch, row.reward
        );
    }
    println!();
    println!(
        "distance {:.3} m in {:.1} s ({} steps), fell: {}, clamped steps: {}",
        result.distance,
        result.steps as f64 * params.sim.dt,
        result.steps,
        result.fell,
        result.clamped_steps,
    );
    println!("normalized return {:.4}", result.normalized_return);
    Ok(())
}
