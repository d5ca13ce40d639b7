//! Quadruped trot-gait toolkit.
//!
//! A self-contained stack for studying how a learned linear policy can
//! harden an open-loop Bezier-curve trot against rough terrain:
//!
//! - [`gait`]: the open-loop trajectory generator — sinusoidal stance sweep,
//!   degree-11 Bezier swing arc, trot phase scheduling, and the steering
//!   composition that turns planar curves into per-leg 3D foot targets.
//! - [`kinematics`]: closed-form forward/inverse kinematics for a 3-DOF leg
//!   and reach clamping.
//! - [`terrain`] and [`sim`]: a deterministic heightfield world with
//!   spring-damper foot contact and Coulomb friction around a single
//!   floating trunk.
//! - [`randomization`]: per-episode draws of masses, friction, and terrain
//!   roughness.
//! - [`policy`] and [`ars`]: the linear gait-modulation policy and the
//!   augmented-random-search trainer.
//! - [`rollout`] and [`eval`]: episode execution, trajectory logging and
//!   replay, and bucketed survivability campaigns.
//!
//! The `examples/` directory holds one runnable program per capability;
//! the `quadgait` binary wraps the same entry points behind subcommands.

pub mod ars;
pub mod config;
pub mod error;
pub mod eval;
pub mod gait;
pub mod kinematics;
pub mod policy;
pub mod randomization;
pub mod rollout;
pub mod seed;
pub mod sim;
pub mod terrain;

pub use ars::{ars_update, train, ArsConfig, TrainMode, TrainOutcome};
pub use config::Config;
pub use error::{Error, Result};
pub use eval::{run_eval_campaign, CampaignReport, EvalCampaignSpec};
pub use gait::{
    bernstein_basis, compose_foot_targets, leg_phase, stance_curve, swing_curve, FootTargets,
    GaitParams, Leg, MotionCommand, PhaseClock, StanceGeometry, YawMemory,
};
pub use kinematics::{
    clamp_to_reachable, default_stand_pose, forward_kinematics, inverse_kinematics, JointAngles,
    LegGeometry, RobotGeometry,
};
pub use policy::{
    heading_controller, load_policy_file, policy_forward, save_policy_file, step_reward,
    ActionBounds, PolicyMatrix,
};
pub use randomization::{D2Distribution, D2Sample};
pub use rollout::{episode_rollout, EpisodeParams, PolicySource, RolloutResult, TrajectoryLog};
pub use sim::{BodyState, Observation, RobotModel, SimConfig, World};
pub use terrain::TerrainField;
