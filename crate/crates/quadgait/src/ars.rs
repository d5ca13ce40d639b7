//! Augmented random search over the linear policy.
//!
//! Antithetic exploration: each iteration draws N direction matrices, rolls
//! out the policy perturbed by +/- noise along each, and moves the
//! parameters along the return-weighted sum of directions, scaled by the
//! standard deviation of the collected returns. No observation whitening
//! and no elite-direction selection; the raw update is enough for a bounded
//! observation vector.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::policy::PolicyMatrix;
use crate::randomization::{D2Distribution, D2Sample};
use crate::rollout::{episode_rollout, EpisodeParams, PolicySource};
use crate::seed::{derive_seed, stream};

/// Search hyperparameters.
#[derive(Clone, Copy, Debug)]
pub struct ArsConfig {
    /// Direction pairs per iteration (2x this many rollouts).
    pub directions: usize,
    /// Parameter step size.
    pub step_size: f64,
    /// Perturbation scale applied to each direction.
    pub exploration_noise: f64,
    /// Episode length in simulator steps.
    pub episode_steps: usize,
    /// Per-step return discount; 1 leaves returns undiscounted.
    pub discount: f64,
}

impl Default for ArsConfig {
    fn default() -> Self {
        Self {
            directions: 8,
            step_size: 0.03,
            exploration_noise: 0.05,
            episode_steps: 5000,
            discount: 1.0,
        }
    }
}

impl ArsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.directions == 0 {
            return Err(Error::Config("need at least one direction".into()));
        }
        if self.step_size <= 0.0 || self.exploration_noise <= 0.0 {
            return Err(Error::Config(
                "step size and exploration noise must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Paired returns for one exploration direction.
#[derive(Clone, Debug)]
pub struct DirectionOutcome {
    pub direction: PolicyMatrix,
    pub reward_pos: f64,
    pub reward_neg: f64,
}

/// Floor applied to the return standard deviation before scaling.
const RETURN_STD_FLOOR: f64 = 1e-6;

/// Draw standard-normal direction matrices, deterministic in `seed`.
pub fn sample_directions(count: usize, seed: u64) -> Vec<PolicyMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| PolicyMatrix::from_fn(|_, _| StandardNormal.sample(&mut rng)))
        .collect()
}

/// One parameter update from a batch of paired returns.
///
/// theta' = theta + alpha / (N sigma_R) * sum_i (r+_i - r-_i) d_i, with
/// sigma_R the population standard deviation of all 2N returns.
pub fn ars_update(
    theta: &PolicyMatrix,
    outcomes: &[DirectionOutcome],
    config: &ArsConfig,
) -> Result<PolicyMatrix> {
    if outcomes.is_empty() || outcomes.len() != config.directions {
        return Err(Error::Config(format!(
            "expected {} direction outcomes, got {}",
            config.directions,
            outcomes.len()
        )));
    }
    let returns: Vec<f64> = outcomes
        .iter()
        .flat_map(|o| [o.reward_pos, o.reward_neg])
        .collect();
    let mean = returns.iter().sum::<f64>() / returns.len() as f64;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / returns.len() as f64;
    let sigma_r = var.sqrt().max(RETURN_STD_FLOOR);

    let mut update = PolicyMatrix::zeros();
    for o in outcomes {
        update += o.direction * (o.reward_pos - o.reward_neg);
    }
    let scale = config.step_size / (config.directions as f64 * sigma_r);
    Ok(theta + update * scale)
}

/// Which environment schedule training follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainMode {
    /// Fresh dynamics and terrain draw every epoch.
    Randomized,
    /// One fixed nominal environment for the whole run.
    Fixed,
}

/// Environment draw for a given epoch under a schedule.
pub fn epoch_environment(
    mode: TrainMode,
    dist: &D2Distribution,
    master_seed: u64,
    epoch: usize,
) -> D2Sample {
    match mode {
        TrainMode::Randomized => {
            dist.sample(derive_seed(master_seed, &[stream::ENVIRONMENT, epoch as u64]))
        }
        TrainMode::Fixed => dist.nominal(master_seed),
    }
}

/// Per-epoch training record.
#[derive(Clone, Debug)]
pub struct TrainLogEntry {
    pub epoch: usize,
    pub sample: D2Sample,
    /// Return of the unperturbed policy on this epoch's evaluation draw.
    pub evaluated_return: f64,
    pub evaluated_distance: f64,
    pub wall_time_s: f64,
}

/// Result of a training run.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub theta: PolicyMatrix,
    pub log: Vec<TrainLogEntry>,
}

/// Train a policy for `epochs` iterations from `theta0`.
///
/// Each epoch draws one environment for all its rollouts, runs the 2N
/// perturbation episodes (in parallel, reduced in direction order), applies
/// the update, then scores the unperturbed policy on the epoch's evaluation
/// draw. With the fixed schedule the evaluation draw is the fixed
/// environment itself, so the curve is directly comparable across epochs.
pub fn train(
    theta0: PolicyMatrix,
    mode: TrainMode,
    epochs: usize,
    master_seed: u64,
    params: &EpisodeParams,
    config: &ArsConfig,
    dist: &D2Distribution,
) -> Result<TrainOutcome> {
    config.validate()?;
    let mut theta = theta0;
    let mut log = Vec::with_capacity(epochs);

    for epoch in 0..epochs {
        let start = std::time::Instant::now();
        let sample = epoch_environment(mode, dist, master_seed, epoch);
        let directions = sample_directions(
            config.directions,
            derive_seed(master_seed, &[stream::DIRECTIONS, epoch as u64]),
        );

        let outcomes: Result<Vec<DirectionOutcome>> = directions
            .into_par_iter()
            .enumerate()
            .map(|(i, direction)| {
                let run = |sign: f64, tag: u64| -> Result<f64> {
                    let perturbed = theta + direction * (sign * config.exploration_noise);
                    let seed =
                        derive_seed(master_seed, &[stream::ROLLOUT, epoch as u64, i as u64, tag]);
                    let result = episode_rollout(
                        &PolicySource::Matrix(Box::new(perturbed)),
                        &sample,
                        params,
                        seed,
                        config.episode_steps,
                        None,
                    )?;
                    Ok(result.normalized_return)
                };
                Ok(DirectionOutcome {
                    reward_pos: run(1.0, 0)?,
                    reward_neg: run(-1.0, 1)?,
                    direction,
                })
            })
            .collect();
        theta = ars_update(&theta, &outcomes?, config)?;

        let eval_sample = match mode {
            TrainMode::Randomized => {
                dist.sample(derive_seed(master_seed, &[stream::EVALUATION, epoch as u64]))
            }
            TrainMode::Fixed => sample.clone(),
        };
        let eval = episode_rollout(
            &PolicySource::Matrix(Box::new(theta)),
            &eval_sample,
            params,
            derive_seed(master_seed, &[stream::EVALUATION, epoch as u64, 1]),
            config.episode_steps,
            None,
        )?;

        log.push(TrainLogEntry {
            epoch,
            sample,
            evaluated_return: eval.normalized_return,
            evaluated_distance: eval.distance,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
    }

    Ok(TrainOutcome { theta, log })
}

/// Write the training log as CSV: epoch, environment fields, evaluated
/// return and distance, wall time.
pub fn write_train_log<W: std::io::Write>(
    log: &[TrainLogEntry],
    master_seed: u64,
    mut w: W,
) -> Result<()> {
    writeln!(w, "# quadgait-train-log v1 master_seed={master_seed}")?;
    let links: Vec<String> = (0..8).map(|i| format!("link_mass_{i}")).collect();
    writeln!(
        w,
        "epoch,base_mass,{},friction,mesh_magnitude,terrain_seed,evaluated_return,evaluated_distance,wall_time_s",
        links.join(",")
    )?;
    for e in log {
        let masses: Vec<String> = e.sample.link_masses.iter().map(|m| m.to_string()).collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            e.epoch,
            e.sample.base_mass,
            masses.join(","),
            e.sample.friction,
            e.sample.mesh_magnitude,
            e.sample.terrain_seed,
            e.evaluated_return,
            e.evaluated_distance,
            e.wall_time_s,
        )?;
    }
    Ok(())
}
