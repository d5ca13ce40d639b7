//! Train a gait-modulation policy on one fixed flat environment and print
//! the learning curve.
//!
//!     cargo run --release -p quadgait --example train_fixed -- [epochs]

use quadgait::ars::{train, ArsConfig, TrainMode};
use quadgait::policy::PolicyMatrix;
use quadgait::randomization::D2Distribution;
use quadgait::rollout::EpisodeParams;

fn main() -> quadgait::Result<()> {
    let epochs: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(50);
    let seed: u64 = std::env::args()
        .nth(2)
        .and_then(|a| a.parse().ok())
        .unwrap_or(42);

    let params = EpisodeParams::default();
    let ars = ArsConfig::default();
    // Fixed nominal environment on flat ground.
    let dist = D2Distribution {
        mesh_magnitude: (0.0, 0.0),
        ..D2Distribution::default()
    };

    let started = std::time::Instant::now();
    let outcome = train(
        PolicyMatrix::zeros(),
        TrainMode::Fixed,
        epochs,
        seed,
        &params,
        &ars,
        &dist,
    )?;

    println!("epoch  evaluated_return  distance_m  wall_s");
    for e in &outcome.log {
        println!(
            "{:>5}  {:>16.4}  {:>10.3}  {:>6.2}",
            e.epoch, e.evaluated_return, e.evaluated_distance, e.wall_time_s
        );
    }
    println!(
        "total {:.1} s; policy norm {:.4}",
        started.elapsed().as_secs_f64(),
        outcome.theta.norm()
    );
    Ok(())
}
