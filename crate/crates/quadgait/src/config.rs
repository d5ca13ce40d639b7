//! TOML configuration covering robot geometry, simulation constants, gait
//! timing, action bounds, search settings, environment randomization, and
//! campaign defaults. Every key has a documented default; unknown keys are
//! rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ars::ArsConfig;
use crate::error::{Error, Result};
use crate::gait::MotionCommand;
use crate::kinematics::{LegGeometry, LegSide, RobotGeometry};
use crate::policy::ActionBounds;
use crate::randomization::D2Distribution;
use crate::rollout::EpisodeParams;
use crate::sim::{RobotModel, SimConfig};

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub robot: RobotSection,
    pub sim: SimSection,
    pub gait: GaitSection,
    pub policy: PolicySection,
    pub heading: HeadingSection,
    pub ars: ArsSection,
    pub d2: D2Section,
    pub eval: EvalSection,
    pub terrain: TerrainSection,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RobotSection {
    pub body_length: f64,
    pub body_width: f64,
    pub trunk_thickness: f64,
    pub standing_height: f64,
    pub l_abd: f64,
    pub l_upper: f64,
    pub l_lower: f64,
    pub base_mass: f64,
    pub link_mass: f64,
    pub foot_friction: f64,
}

impl Default for RobotSection {
    fn default() -> Self {
        Self {
            body_length: 0.25,
            body_width: 0.15,
            trunk_thickness: 0.05,
            standing_height: 0.2,
            l_abd: 0.04,
            l_upper: 0.11,
            l_lower: 0.11,
            base_mass: 1.1,
            link_mass: 0.15,
            foot_friction: 1.15,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt: f64,
    pub contact_stiffness: f64,
    pub contact_damping: f64,
    pub gravity: f64,
    pub slip_velocity_band: f64,
    pub accel_filter_tau: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        let c = SimConfig::default();
        Self {
            dt: c.dt,
            contact_stiffness: c.contact_stiffness,
            contact_damping: c.contact_damping,
            gravity: c.gravity,
            slip_velocity_band: c.slip_velocity_band,
            accel_filter_tau: c.accel_filter_tau,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GaitSection {
    /// Swing duration, seconds.
    pub t_swing: f64,
    /// Stance sweep velocity, m/s; stance duration = 2 l_span / velocity.
    pub step_velocity: f64,
    /// Half stride length, meters.
    pub l_span: f64,
    /// Travel direction relative to forward, radians.
    pub rho: f64,
}

impl Default for GaitSection {
    fn default() -> Self {
        Self {
            t_swing: 0.2,
            step_velocity: 0.35,
            l_span: 0.035,
            rho: 0.0,
        }
    }
}

impl GaitSection {
    pub fn t_stance(&self) -> f64 {
        2.0 * self.l_span / self.step_velocity
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PolicySection {
    pub psi_range: [f64; 2],
    pub delta_range: [f64; 2],
    pub residual_limit: f64,
}

impl Default for PolicySection {
    fn default() -> Self {
        let b = ActionBounds::default();
        Self {
            psi_range: [b.psi_range.0, b.psi_range.1],
            delta_range: [b.delta_range.0, b.delta_range.1],
            residual_limit: b.residual_limit,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct HeadingSection {
    /// Yaw step command per radian of heading error, meters.
    pub gain: f64,
    /// Yaw step saturation, meters.
    pub omega_bar_limit: f64,
}

impl Default for HeadingSection {
    fn default() -> Self {
        Self {
            gain: -0.1,
            omega_bar_limit: 0.02,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ArsSection {
    pub directions: usize,
    pub step_size: f64,
    pub exploration_noise: f64,
    pub episode_steps: usize,
    pub discount: f64,
}

impl Default for ArsSection {
    fn default() -> Self {
        let c = ArsConfig::default();
        Self {
            directions: c.directions,
            step_size: c.step_size,
            exploration_noise: c.exploration_noise,
            episode_steps: c.episode_steps,
            discount: c.discount,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct D2Section {
    pub base_mass: f64,
    pub link_mass: f64,
    pub mass_spread: f64,
    pub friction: [f64; 2],
    pub mesh_magnitude: [f64; 2],
}

impl Default for D2Section {
    fn default() -> Self {
        let d = D2Distribution::default();
        Self {
            base_mass: d.base_mass,
            link_mass: d.link_mass,
            mass_spread: d.mass_spread,
            friction: [d.friction.0, d.friction.1],
            mesh_magnitude: [d.mesh_magnitude.0, d.mesh_magnitude.1],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub trials: usize,
    pub max_steps: usize,
    pub buckets: [f64; 2],
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            trials: 100,
            max_steps: 10_000,
            buckets: [5.0, 90.0],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TerrainSection {
    /// Lattice pitch, meters.
    pub cell: f64,
    /// Half-width across the travel direction, meters.
    pub lateral_extent: f64,
    /// Margin behind the start, meters.
    pub back_extent: f64,
}

impl Default for TerrainSection {
    fn default() -> Self {
        Self {
            cell: 0.05,
            lateral_extent: 3.0,
            back_extent: 3.0,
        }
    }
}

impl Config {
    /// Parse a config file; missing keys take defaults, unknown keys and
    /// malformed values are errors naming the offending line.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|span| {
                    text[..span.start.min(text.len())]
                        .bytes()
                        .filter(|&b| b == b'\n')
                        .count()
                        + 1
                })
                .unwrap_or(0);
            Error::Parse {
                path: source.to_string(),
                line,
                msg: e.message().to_string(),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.gait.t_swing <= 0.0 || self.gait.step_velocity <= 0.0 || self.gait.l_span <= 0.0 {
            return Err(Error::Config(
                "gait timing values must be positive".into(),
            ));
        }
        self.to_sim_config().validate()?;
        self.to_robot_model().validate()?;
        self.to_action_bounds().validate()?;
        Ok(())
    }

    /// Render the effective configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn to_robot_geometry(&self) -> RobotGeometry {
        let r = &self.robot;
        let leg = |side| LegGeometry {
            l_abd: r.l_abd,
            l_upper: r.l_upper,
            l_lower: r.l_lower,
            side,
        };
        RobotGeometry {
            body_length: r.body_length,
            body_width: r.body_width,
            trunk_thickness: r.trunk_thickness,
            standing_height: r.standing_height,
            legs: [
                leg(LegSide::Left),
                leg(LegSide::Right),
                leg(LegSide::Left),
                leg(LegSide::Right),
            ],
            limits: Default::default(),
        }
    }

    pub fn to_robot_model(&self) -> RobotModel {
        RobotModel {
            base_mass: self.robot.base_mass,
            link_masses: [self.robot.link_mass; 8],
            foot_friction: self.robot.foot_friction,
            geometry: self.to_robot_geometry(),
        }
    }

    pub fn to_sim_config(&self) -> SimConfig {
        SimConfig {
            dt: self.sim.dt,
            contact_stiffness: self.sim.contact_stiffness,
            contact_damping: self.sim.contact_damping,
            gravity: self.sim.gravity,
            slip_velocity_band: self.sim.slip_velocity_band,
            accel_filter_tau: self.sim.accel_filter_tau,
        }
    }

    pub fn to_action_bounds(&self) -> ActionBounds {
        ActionBounds {
            psi_range: (self.policy.psi_range[0], self.policy.psi_range[1]),
            delta_range: (self.policy.delta_range[0], self.policy.delta_range[1]),
            residual_limit: self.policy.residual_limit,
        }
    }

    pub fn to_ars_config(&self) -> ArsConfig {
        ArsConfig {
            directions: self.ars.directions,
            step_size: self.ars.step_size,
            exploration_noise: self.ars.exploration_noise,
            episode_steps: self.ars.episode_steps,
            discount: self.ars.discount,
        }
    }

    pub fn to_d2_distribution(&self) -> D2Distribution {
        D2Distribution {
            base_mass: self.d2.base_mass,
            link_mass: self.d2.link_mass,
            mass_spread: self.d2.mass_spread,
            friction: (self.d2.friction[0], self.d2.friction[1]),
            mesh_magnitude: (self.d2.mesh_magnitude[0], self.d2.mesh_magnitude[1]),
        }
    }

    pub fn to_episode_params(&self) -> EpisodeParams {
        EpisodeParams {
            model: self.to_robot_model(),
            sim: self.to_sim_config(),
            bounds: self.to_action_bounds(),
            command: MotionCommand {
                rho: self.gait.rho,
                omega_bar: 0.0,
                l_span: self.gait.l_span,
            },
            heading_gain: self.heading.gain,
            omega_bar_limit: self.heading.omega_bar_limit,
            t_swing: self.gait.t_swing,
            t_stance: self.gait.t_stance(),
            discount: self.ars.discount,
            terrain_cell: self.terrain.cell,
            terrain_lateral: self.terrain.lateral_extent,
            terrain_back: self.terrain.back_extent,
        }
    }
}
