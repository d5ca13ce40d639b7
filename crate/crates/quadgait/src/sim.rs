//! Minimal deterministic trunk simulator.
//!
//! The trunk is a single floating 6-DOF rigid body. Legs are massless and
//! positioned kinematically at their commanded targets; their link masses
//! fold into the trunk's mass and inertia. Feet are contact points against
//! the heightfield with a spring-damper normal force and regularized Coulomb
//! friction. One `World` owns all mutable state; independent worlds can step
//! concurrently.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::gait::{FootTargets, Leg, PhaseClock};
use crate::kinematics::RobotGeometry;
use crate::terrain::TerrainField;

/// Integration and contact constants.
#[derive(Clone, Copy, Debug)]
pub struct SimConfig {
    /// Step size, seconds.
    pub dt: f64,
    /// Contact spring stiffness, N/m.
    pub contact_stiffness: f64,
    /// Contact damping, N·s/m.
    pub contact_damping: f64,
    /// Gravitational acceleration, m/s².
    pub gravity: f64,
    /// Slip speed below which friction ramps linearly instead of switching
    /// sign discontinuously, m/s.
    pub slip_velocity_band: f64,
    /// First-order low-pass time constant for the observed acceleration,
    /// seconds (contact impacts are impulsive; an IMU band-limits them).
    /// Zero disables the filter.
    pub accel_filter_tau: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            contact_stiffness: 800.0,
            contact_damping: 40.0,
            gravity: 9.81,
            slip_velocity_band: 0.02,
            accel_filter_tau: 0.05,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dt <= 0.0 || self.contact_stiffness <= 0.0 || self.contact_damping <= 0.0 {
            return Err(Error::Config(
                "dt, contact stiffness and damping must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Trunk mass properties and foot friction, the quantities the environment
/// randomization touches.
#[derive(Clone, Debug)]
pub struct RobotModel {
    /// Trunk mass, kg.
    pub base_mass: f64,
    /// Per-link leg masses, kg; two links per leg in FL, FR, BL, BR order.
    pub link_masses: [f64; 8],
    /// Foot friction coefficient; multiplies the terrain's.
    pub foot_friction: f64,
    pub geometry: RobotGeometry,
}

impl RobotModel {
    pub fn validate(&self) -> Result<()> {
        if self.base_mass <= 0.0 || self.link_masses.iter().any(|&m| m <= 0.0) {
            return Err(Error::Config("masses must be > 0".into()));
        }
        if self.foot_friction <= 0.0 {
            return Err(Error::Config("friction must be > 0".into()));
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.base_mass + self.link_masses.iter().sum::<f64>()
    }

    /// Combined mass of one leg's links.
    pub fn leg_mass(&self, leg: Leg) -> f64 {
        self.link_masses[2 * leg.index()] + self.link_masses[2 * leg.index() + 1]
    }

    /// Diagonal trunk inertia: a solid box for the trunk plus the leg masses
    /// as points hanging half a standing height below their hips. Products
    /// of inertia are dropped; the mass layout is near-symmetric.
    pub fn inertia_diag(&self) -> Vector3<f64> {
        let g = &self.geometry;
        let (l, w, t) = (g.body_length, g.body_width, g.trunk_thickness);
        let m = self.base_mass;
        let mut ixx = m * (w * w + t * t) / 12.0;
        let mut iyy = m * (l * l + t * t) / 12.0;
        let mut izz = m * (l * l + w * w) / 12.0;
        let z = -g.standing_height / 2.0;
        for leg in Leg::ALL {
            let ml = self.leg_mass(leg);
            let hp = g.hip_position(leg);
            ixx += ml * (hp.y * hp.y + z * z);
            iyy += ml * (hp.x * hp.x + z * z);
            izz += ml * (hp.x * hp.x + hp.y * hp.y);
        }
        Vector3::new(ixx, iyy, izz)
    }
}

impl Default for RobotModel {
    fn default() -> Self {
        Self {
            base_mass: 1.1,
            link_masses: [0.15; 8],
            foot_friction: 1.15,
            geometry: RobotGeometry::default(),
        }
    }
}

/// Trunk state. Angular velocity and the IMU acceleration are body-frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodyState {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    pub linear_velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
    /// Specific force (what an accelerometer reads): body-frame acceleration
    /// minus gravity, so a level resting trunk reads (0, 0, +g).
    pub linear_acceleration: Vector3<f64>,
}

impl BodyState {
    pub fn at_rest(position: Vector3<f64>) -> Self {
        Self {
            position,
            orientation: UnitQuaternion::identity(),
            linear_velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
            linear_acceleration: Vector3::zeros(),
        }
    }

    /// Roll, pitch, yaw relative to gravity (ZYX convention).
    pub fn euler_angles(&self) -> (f64, f64, f64) {
        self.orientation.euler_angles()
    }

    fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.linear_velocity.iter().all(|v| v.is_finite())
            && self.angular_velocity.iter().all(|v| v.is_finite())
            && self.orientation.coords.iter().all(|v| v.is_finite())
    }
}

/// Per-step contact diagnostics.
#[derive(Clone, Copy, Debug, Default)]
pub struct ContactReport {
    /// Legs whose foot produced a normal force this step.
    pub in_contact: [bool; 4],
    /// Total normal force magnitude, N.
    pub total_normal_force: f64,
}

/// One simulated robot on one terrain.
#[derive(Clone, Debug)]
pub struct World {
    pub state: BodyState,
    pub model: RobotModel,
    pub terrain: TerrainField,
    pub config: SimConfig,
    prev_targets: Option<[Vector3<f64>; 4]>,
    filtered_accel: Vector3<f64>,
    steps: usize,
}

/// The 12-component observation: roll, pitch, body angular velocity, body
/// specific force, and the four leg phases rescaled from [0, 2) to [-1, 1).
pub type Observation = [f64; 12];

impl World {
    /// Place the robot at the world origin, trunk level, feet at the stand
    /// pose, standing on the terrain at the static contact equilibrium
    /// (trunk lowered by the weight-share penetration of the springs).
    pub fn new(model: RobotModel, terrain: TerrainField, config: SimConfig) -> Result<Self> {
        model.validate()?;
        config.validate()?;
        let mut ground: f64 = 0.0;
        for leg in Leg::ALL {
            let hip = model.geometry.hip_position(leg);
            let lg = model.geometry.leg(leg);
            let foot_y = hip.y + lg.side.sign() * lg.l_abd;
            ground = ground.max(terrain.height_at(hip.x, foot_y)?);
        }
        let settle = model.total_mass() * config.gravity / (4.0 * config.contact_stiffness);
        let start = Vector3::new(0.0, 0.0, ground + model.geometry.standing_height - settle);
        Ok(Self {
            state: BodyState::at_rest(start),
            model,
            terrain,
            config,
            prev_targets: None,
            filtered_accel: Vector3::zeros(),
            steps: 0,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// World-frame position of a foot commanded to `target` (hip frame).
    pub fn foot_world_position(&self, leg: Leg, target: Vector3<f64>) -> Vector3<f64> {
        let hip = self.model.geometry.hip_position(leg);
        self.state.position + self.state.orientation * (hip + target)
    }

    /// Contact force and torque (about the trunk center) for the feet at
    /// the given world positions, moving at the given velocities.
    fn contact_forces(
        &self,
        feet: &[Vector3<f64>; 4],
        feet_vel: &[Vector3<f64>; 4],
        trunk: &Vector3<f64>,
        report: Option<&mut ContactReport>,
    ) -> Result<(Vector3<f64>, Vector3<f64>)> {
        let cfg = &self.config;
        let mass = self.model.total_mass();
        let mut force = Vector3::zeros();
        let mut torque = Vector3::zeros();
        let mut report = report;
        for idx in 0..4 {
            let foot = feet[idx];
            let ground = self.terrain.height_at(foot.x, foot.y)?;
            let pen_vertical = ground - foot.z;
            if pen_vertical <= 0.0 {
                continue;
            }
            let normal = self.terrain.normal_at(foot.x, foot.y)?;
            let pen = pen_vertical * normal.z;
            let pen_rate = -feet_vel[idx].dot(&normal);
            // Damping bounded by the elastic force: no force spike when a
            // foot first touches down, no suction when it lifts.
            let elastic = cfg.contact_stiffness * pen;
            let normal_force =
                (elastic + cfg.contact_damping * pen_rate).clamp(0.0, 2.0 * elastic);
            if normal_force == 0.0 {
                continue;
            }
            if let Some(r) = report.as_deref_mut() {
                r.in_contact[idx] = true;
                r.total_normal_force += normal_force;
            }

            let mu = self.model.foot_friction * self.terrain.friction;
            let tangential = feet_vel[idx] - feet_vel[idx].dot(&normal) * normal;
            let slip = tangential.norm();
            let friction = if slip > 1e-12 {
                // Coulomb limit, with the low-slip regime capped by the
                // impulse that would cancel a quarter of the slip in one
                // step; keeps stiction-like grip without integrator
                // overshoot.
                let cone = mu * normal_force * (slip / cfg.slip_velocity_band).min(1.0);
                let guard = 0.25 * mass * slip / cfg.dt;
                -tangential / slip * cone.min(guard)
            } else {
                Vector3::zeros()
            };

            let f = normal * normal_force + friction;
            force += f;
            torque += (foot - trunk).cross(&f);
        }
        Ok((force, torque))
    }

    /// Advance one step with the given commanded foot targets.
    ///
    /// Velocity-Verlet translation (contact forces evaluated at the old and
    /// the advanced position): springs stay energy-neutral and free flight
    /// integrates exactly. Rotation advances on the averaged torque with
    /// the gyroscopic term.
    pub fn step(&mut self, targets: &FootTargets) -> Result<ContactReport> {
        let cfg = self.config;
        let mass = self.model.total_mass();
        let inertia = self.model.inertia_diag();
        let rot = self.state.orientation;
        let gravity = Vector3::new(0.0, 0.0, -mass * cfg.gravity);
        let mut report = ContactReport::default();

        if !self.state.is_finite() {
            return Err(Error::Diverged { step: self.steps + 1 });
        }

        let mut feet = [Vector3::zeros(); 4];
        let mut feet_vel = [Vector3::zeros(); 4];
        for leg in Leg::ALL {
            let idx = leg.index();
            let foot = self.foot_world_position(leg, targets.get(leg));
            feet[idx] = foot;
            // Foot velocity: instantaneous trunk motion plus the commanded
            // foot motion relative to the trunk (finite-differenced against
            // the previous step's target).
            let r = foot - self.state.position;
            let target_vel = match &self.prev_targets {
                Some(prev) => rot * ((targets.get(leg) - prev[idx]) / cfg.dt),
                None => Vector3::zeros(),
            };
            feet_vel[idx] = self.state.linear_velocity
                + (rot * self.state.angular_velocity).cross(&r)
                + target_vel;
        }

        let (contact_1, torque_1) =
            self.contact_forces(&feet, &feet_vel, &self.state.position, Some(&mut report))?;
        let accel_1 = (gravity + contact_1) / mass;

        let old_position = self.state.position;
        self.state.position +=
            self.state.linear_velocity * cfg.dt + accel_1 * (0.5 * cfg.dt * cfg.dt);

        // Second contact evaluation at the advanced position. Feet shift
        // with the trunk; orientation change within the step is second
        // order and ignored here.
        let shift = self.state.position - old_position;
        let mut feet_2 = feet;
        for f in &mut feet_2 {
            *f += shift;
        }
        let (contact_2, torque_2) =
            self.contact_forces(&feet_2, &feet_vel, &self.state.position, None)?;
        let accel_2 = (gravity + contact_2) / mass;

        self.state.linear_velocity += (accel_1 + accel_2) * (0.5 * cfg.dt);

        // Trunk rotation in the body frame with the gyroscopic term.
        let torque_world = (torque_1 + torque_2) * 0.5;
        let torque_body = rot.inverse_transform_vector(&torque_world);
        let inertia_inv = Matrix3::from_diagonal(&inertia.map(|v| 1.0 / v));
        let omega = self.state.angular_velocity;
        let omega_dot =
            inertia_inv * (torque_body - omega.cross(&inertia.component_mul(&omega)));
        self.state.angular_velocity += omega_dot * cfg.dt;
        self.state.orientation = UnitQuaternion::from_quaternion(
            (self.state.orientation
                * UnitQuaternion::from_scaled_axis(self.state.angular_velocity * cfg.dt))
            .into_inner()
            .normalize(),
        );

        let gravity_vec = Vector3::new(0.0, 0.0, -cfg.gravity);
        self.state.linear_acceleration = rot
            .inverse_transform_vector(&((accel_1 + accel_2) * 0.5 - gravity_vec));
        let gravity_column = self
            .state
            .orientation
            .inverse_transform_vector(&Vector3::new(0.0, 0.0, cfg.gravity));
        let compensated = self.state.linear_acceleration - gravity_column;
        if cfg.accel_filter_tau > 0.0 {
            let blend = (cfg.dt / cfg.accel_filter_tau).min(1.0);
            self.filtered_accel += (compensated - self.filtered_accel) * blend;
        } else {
            self.filtered_accel = compensated;
        }

        self.prev_targets = Some(targets.targets);
        self.steps += 1;

        if !self.state.is_finite() {
            return Err(Error::Diverged { step: self.steps });
        }
        Ok(report)
    }

    /// Assemble the observation vector from the trunk state and gait clock.
    ///
    /// The acceleration channels are gravity-compensated and band-limited:
    /// the body-frame gravity column is subtracted from the specific force
    /// and the result low-pass filtered, so a level resting trunk observes
    /// (0, 0, 0) and contact impulses do not alias into the policy input.
    pub fn observe(&self, clock: &PhaseClock) -> Observation {
        let (roll, pitch, _) = self.state.euler_angles();
        let w = self.state.angular_velocity;
        let a = self.filtered_accel;
        let phases = clock.phases();
        [
            roll,
            pitch,
            w.x,
            w.y,
            w.z,
            a.x,
            a.y,
            a.z,
            phases[0] - 1.0,
            phases[1] - 1.0,
            phases[2] - 1.0,
            phases[3] - 1.0,
        ]
    }

    /// Fall check: excessive roll or pitch, or the trunk box touching the
    /// terrain (checked at the underside center and corners).
    pub fn detect_fall(&self) -> bool {
        let (roll, pitch, _) = self.state.euler_angles();
        let limit = 60.0_f64.to_radians();
        if roll.abs() > limit || pitch.abs() > limit {
            return true;
        }
        let g = &self.model.geometry;
        let hx = g.body_length / 2.0;
        let hy = g.body_width / 2.0;
        let hz = g.trunk_thickness / 2.0;
        let underside = [
            Vector3::new(0.0, 0.0, -hz),
            Vector3::new(hx, hy, -hz),
            Vector3::new(hx, -hy, -hz),
            Vector3::new(-hx, hy, -hz),
            Vector3::new(-hx, -hy, -hz),
        ];
        for p in underside {
            let w = self.state.position + self.state.orientation * p;
            if let Ok(h) = self.terrain.height_at(w.x, w.y) {
                if w.z < h {
                    return true;
                }
            }
        }
        false
    }
}
