//! Scratch probe: desk-scale method ordering on shared randomized trials.

use quadgait::ars::{train, ArsConfig, TrainMode};
use quadgait::eval::{run_eval_campaign, EvalCampaignSpec};
use quadgait::policy::PolicyMatrix;
use quadgait::randomization::D2Distribution;
use quadgait::rollout::{EpisodeParams, PolicySource};

fn main() -> quadgait::Result<()> {
    let epochs: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(100);
    let trials: usize = std::env::args()
        .nth(2)
        .and_then(|a| a.parse().ok())
        .unwrap_or(30);

    let params = EpisodeParams::default();
    let ars = ArsConfig::default();
    let dist = D2Distribution::default();
    let train_seed = 7;

    let t0 = std::time::Instant::now();
    let d2 = train(
        PolicyMatrix::zeros(),
        TrainMode::Randomized,
        epochs,
        train_seed,
        &params,
        &ars,
        &dist,
    )?;
    println!(
        "d2 trained: last return {:.4} ({:.0} s)",
        d2.log.last().unwrap().evaluated_return,
        t0.elapsed().as_secs_f64()
    );
    let t0 = std::time::Instant::now();
    let fixed = train(
        PolicyMatrix::zeros(),
        TrainMode::Fixed,
        epochs,
        train_seed,
        &params,
        &ars,
        &dist,
    )?;
    println!(
        "fixed trained: last return {:.4} ({:.0} s)",
        fixed.log.last().unwrap().evaluated_return,
        t0.elapsed().as_secs_f64()
    );

    let spec = EvalCampaignSpec {
        trials,
        max_steps: 4000,
        master_seed: 99,
        ..EvalCampaignSpec::default()
    };
    for (name, source) in [
        ("d2-gmbc ", PolicySource::Matrix(Box::new(d2.theta))),
        ("gmbc    ", PolicySource::Matrix(Box::new(fixed.theta))),
        ("openloop", PolicySource::OpenLoop),
    ] {
        let report = run_eval_campaign(&source, &spec, &dist, &params)?;
        let mean_dist: f64 = report.records.iter().map(|r| r.distance).sum::<f64>()
            / report.records.len() as f64;
        println!(
            "{name}: survival {:>5.1}% ({} of {}), far bucket {}, mean distance {:.2} m",
            100.0 * report.survival_rate(),
            report.survived(),
            report.trials(),
            report.far_lived(),
            mean_dist,
        );
    }
    Ok(())
}
