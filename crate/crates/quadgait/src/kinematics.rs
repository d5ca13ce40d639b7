//! Closed-form kinematics for a 3-DOF leg: hip abduction about the body's
//! forward axis, then a two-link pitch chain (hip pitch + knee).
//!
//! All positions are in the leg's hip frame: x forward, y left, z up. The
//! knee solution always takes the knee-backward branch so the mapping from
//! foot position to joint angles is continuous across the workspace.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::gait::{Leg, StanceGeometry};

/// Which side of the body a leg hangs from; mirrors the abduction offset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LegSide {
    Left,
    Right,
}

impl LegSide {
    /// Lateral sign: +1 left, -1 right.
    pub const fn sign(self) -> f64 {
        match self {
            LegSide::Left => 1.0,
            LegSide::Right => -1.0,
        }
    }
}

/// Link dimensions of one leg.
#[derive(Clone, Copy, Debug)]
pub struct LegGeometry {
    /// Lateral hip offset from the abduction axis to the pitch axis, meters.
    pub l_abd: f64,
    /// Upper link length, meters.
    pub l_upper: f64,
    /// Lower link length, meters.
    pub l_lower: f64,
    pub side: LegSide,
}

impl LegGeometry {
    pub fn new(l_abd: f64, l_upper: f64, l_lower: f64, side: LegSide) -> Result<Self> {
        if l_abd <= 0.0 || l_upper <= 0.0 || l_lower <= 0.0 {
            return Err(Error::Config("leg link lengths must be > 0".into()));
        }
        Ok(Self {
            l_abd,
            l_upper,
            l_lower,
            side,
        })
    }

    /// Maximum planar extension of the pitch chain.
    pub fn max_extension(&self) -> f64 {
        self.l_upper + self.l_lower
    }

    /// Minimum planar extension of the pitch chain.
    pub fn min_extension(&self) -> f64 {
        (self.l_upper - self.l_lower).abs()
    }
}

/// Joint angles, radians. Zero everywhere is the straight-down pose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointAngles {
    /// Roll about the forward axis.
    pub abduction: f64,
    /// Upper-link pitch; positive swings the foot forward.
    pub hip_pitch: f64,
    /// Knee bend; non-negative on the knee-backward branch.
    pub knee: f64,
}

/// Symmetric joint limits applied by the solver.
#[derive(Clone, Copy, Debug)]
pub struct JointLimits {
    pub abduction: (f64, f64),
    pub hip_pitch: (f64, f64),
    pub knee: (f64, f64),
}

impl Default for JointLimits {
    fn default() -> Self {
        Self {
            abduction: (-1.2, 1.2),
            hip_pitch: (-2.4, 2.4),
            knee: (0.0, 2.9),
        }
    }
}

impl JointLimits {
    pub fn contains(&self, angles: &JointAngles) -> bool {
        let within = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        within(angles.abduction, self.abduction)
            && within(angles.hip_pitch, self.hip_pitch)
            && within(angles.knee, self.knee)
    }
}

/// Body dimensions plus the four legs.
#[derive(Clone, Debug)]
pub struct RobotGeometry {
    /// Hip-to-hip distance along x, meters.
    pub body_length: f64,
    /// Hip-to-hip distance along y, meters.
    pub body_width: f64,
    /// Trunk box height used for ground-contact checks, meters.
    pub trunk_thickness: f64,
    /// Nominal hip height above ground when standing, meters.
    pub standing_height: f64,
    pub legs: [LegGeometry; 4],
    pub limits: JointLimits,
}

impl Default for RobotGeometry {
    fn default() -> Self {
        let leg = |side| LegGeometry {
            l_abd: 0.04,
            l_upper: 0.11,
            l_lower: 0.11,
            side,
        };
        Self {
            body_length: 0.25,
            body_width: 0.15,
            trunk_thickness: 0.05,
            standing_height: 0.2,
            legs: [
                leg(LegSide::Left),  // FL
                leg(LegSide::Right), // FR
                leg(LegSide::Left),  // BL
                leg(LegSide::Right), // BR
            ],
            limits: JointLimits::default(),
        }
    }
}

impl RobotGeometry {
    pub fn leg(&self, leg: Leg) -> &LegGeometry {
        &self.legs[leg.index()]
    }

    /// Hip position in the trunk frame (trunk center at the hip plane).
    pub fn hip_position(&self, leg: Leg) -> Vector3<f64> {
        let hx = self.body_length / 2.0;
        let hy = self.body_width / 2.0;
        match leg {
            Leg::FrontLeft => Vector3::new(hx, hy, 0.0),
            Leg::FrontRight => Vector3::new(hx, -hy, 0.0),
            Leg::BackLeft => Vector3::new(-hx, hy, 0.0),
            Leg::BackRight => Vector3::new(-hx, -hy, 0.0),
        }
    }
}

/// Foot position for the given joint angles.
pub fn forward_kinematics(geom: &LegGeometry, angles: &JointAngles) -> Vector3<f64> {
    let s = geom.side.sign();
    let (a, hp, k) = (angles.abduction, angles.hip_pitch, angles.knee);

    // Pitch-plane coordinates: forward x, downward extension h.
    let x = geom.l_upper * hp.sin() + geom.l_lower * (hp + k).sin();
    let h = geom.l_upper * hp.cos() + geom.l_lower * (hp + k).cos();

    // Roll the (y, z) pair by the abduction angle.
    let y0 = s * geom.l_abd;
    let z0 = -h;
    Vector3::new(
        x,
        y0 * a.cos() - z0 * a.sin(),
        y0 * a.sin() + z0 * a.cos(),
    )
}

/// Intermediate IK quantities shared by the solver and the clamp.
struct IkFrame {
    /// Radial distance of (y, z) from the abduction axis.
    r: f64,
    /// Downward extension in the pitch plane.
    h: f64,
    /// Pitch-chain extension required.
    d: f64,
}

fn ik_frame(geom: &LegGeometry, target: &Vector3<f64>) -> IkFrame {
    let r = target.y.hypot(target.z);
    let h = (r * r - geom.l_abd * geom.l_abd).max(0.0).sqrt();
    let d = target.x.hypot(h);
    IkFrame { r, h, d }
}

fn solve_with_frame(geom: &LegGeometry, target: &Vector3<f64>, frame: &IkFrame) -> JointAngles {
    let s = geom.side.sign();
    let abduction = target.z.atan2(target.y) - (-frame.h).atan2(s * geom.l_abd);
    // Wrap into (-pi, pi] so the right-side branch does not pick up a full turn.
    let abduction = wrap_angle(abduction);

    let cos_knee = ((frame.d * frame.d
        - geom.l_upper * geom.l_upper
        - geom.l_lower * geom.l_lower)
        / (2.0 * geom.l_upper * geom.l_lower))
        .clamp(-1.0, 1.0);
    let knee = cos_knee.acos();
    let hip_pitch = target.x.atan2(frame.h)
        - (geom.l_lower * knee.sin()).atan2(geom.l_upper + geom.l_lower * cos_knee);

    JointAngles {
        abduction,
        hip_pitch,
        knee,
    }
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a % two_pi;
    if w > std::f64::consts::PI {
        w -= two_pi;
    } else if w <= -std::f64::consts::PI {
        w += two_pi;
    }
    w
}

/// Joint angles reaching `target`, on the knee-backward branch.
///
/// Unreachable targets produce [`Error::OutOfReach`] carrying the nearest
/// reachable point (the same point `clamp_to_reachable` returns).
pub fn inverse_kinematics(
    geom: &LegGeometry,
    limits: &JointLimits,
    target: &Vector3<f64>,
) -> Result<JointAngles> {
    let frame = ik_frame(geom, target);
    let reachable = frame.r >= geom.l_abd
        && frame.d <= geom.max_extension()
        && frame.d >= geom.min_extension();
    if reachable {
        let angles = solve_with_frame(geom, target, &frame);
        if limits.contains(&angles) {
            return Ok(angles);
        }
    }
    let (nearest, _) = clamp_to_reachable(geom, limits, target);
    Err(Error::OutOfReach {
        x: target.x,
        y: target.y,
        z: target.z,
        nx: nearest.x,
        ny: nearest.y,
        nz: nearest.z,
    })
}

/// Project a target onto the reachable workspace.
///
/// Returns the (possibly unchanged) target and whether clamping occurred.
/// The projection scales the lateral radius out of the abduction cylinder
/// and the chain extension into its annulus, then re-runs the solver; joint
/// limits are enforced by clamping the solved angles.
pub fn clamp_to_reachable(
    geom: &LegGeometry,
    limits: &JointLimits,
    target: &Vector3<f64>,
) -> (Vector3<f64>, bool) {
    const MARGIN: f64 = 1e-9;
    let mut p = *target;
    let mut clamped = false;

    let frame = ik_frame(geom, &p);
    if frame.r < geom.l_abd + MARGIN {
        if frame.r < 1e-12 {
            p.y = 0.0;
            p.z = -(geom.l_abd + MARGIN);
        } else {
            let scale = (geom.l_abd + MARGIN) / frame.r;
            p.y *= scale;
            p.z *= scale;
        }
        clamped = true;
    }

    let mut frame = ik_frame(geom, &p);
    let d_max = geom.max_extension() - MARGIN;
    let d_min = geom.min_extension() + MARGIN;
    if frame.d > d_max || frame.d < d_min {
        let d_target = frame.d.clamp(d_min, d_max);
        let scale = d_target / frame.d.max(1e-12);
        // Scale the pitch-plane pair (x, h); h shrinks toward the abduction
        // cylinder, so rebuild (y, z) from the solved abduction angle.
        let abduction = solve_with_frame(geom, &p, &frame).abduction;
        let x = p.x * scale;
        let h = frame.h * scale;
        let s = geom.side.sign();
        let y0 = s * geom.l_abd;
        let z0 = -h;
        p = Vector3::new(
            x,
            y0 * abduction.cos() - z0 * abduction.sin(),
            y0 * abduction.sin() + z0 * abduction.cos(),
        );
        clamped = true;
        frame = ik_frame(geom, &p);
    }

    let mut angles = solve_with_frame(geom, &p, &frame);
    let clamp = |v: f64, (lo, hi): (f64, f64)| v.clamp(lo, hi);
    let limited = JointAngles {
        abduction: clamp(angles.abduction, limits.abduction),
        hip_pitch: clamp(angles.hip_pitch, limits.hip_pitch),
        knee: clamp(angles.knee, limits.knee),
    };
    if limited != angles {
        angles = limited;
        clamped = true;
    }
    if clamped {
        (forward_kinematics(geom, &angles), true)
    } else {
        (*target, false)
    }
}

/// Rest stance for the whole robot: feet straight below their hips at the
/// configured standing height, plus the per-leg stand angles.
pub fn default_stand_pose(geom: &RobotGeometry) -> Result<StanceGeometry> {
    let mut f_stand = [Vector3::zeros(); 4];
    for leg in Leg::ALL {
        let lg = geom.leg(leg);
        let rest = Vector3::new(0.0, lg.side.sign() * lg.l_abd, -geom.standing_height);
        inverse_kinematics(lg, &geom.limits, &rest).map_err(|_| {
            Error::Config(format!(
                "standing height {} unreachable for leg {}",
                geom.standing_height,
                leg.label()
            ))
        })?;
        f_stand[leg.index()] = rest;
    }
    Ok(StanceGeometry::new(f_stand))
}
