//! Open-loop trot gait generation.
//!
//! Foot trajectories are closed planar curves in a travel/height plane: a
//! sinusoidal stance sweep followed by a degree-11 Bezier swing arc. A phase
//! scheduler staggers the four legs into a trot, and a steering layer rotates
//! and combines the planar curves into per-leg 3D targets in each hip frame.
//!
//! Axis convention: x forward, y left, z up. Ground penetration during stance
//! is negative z.

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Degree of the swing Bezier curve (12 control points).
pub const SWING_DEGREE: usize = 11;

/// Threshold below which the yaw step direction is treated as undefined.
const YAW_STEP_EPS: f64 = 1e-9;

/// Leg identifiers, in the order used for flattened 12-vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Leg {
    FrontLeft,
    FrontRight,
    BackLeft,
    BackRight,
}

impl Leg {
    pub const ALL: [Leg; 4] = [
        Leg::FrontLeft,
        Leg::FrontRight,
        Leg::BackLeft,
        Leg::BackRight,
    ];

    /// Index into per-leg arrays (FL 0, FR 1, BL 2, BR 3).
    pub const fn index(self) -> usize {
        match self {
            Leg::FrontLeft => 0,
            Leg::FrontRight => 1,
            Leg::BackLeft => 2,
            Leg::BackRight => 3,
        }
    }

    /// Short display label.
    pub const fn label(self) -> &'static str {
        match self {
            Leg::FrontLeft => "FL",
            Leg::FrontRight => "FR",
            Leg::BackLeft => "BL",
            Leg::BackRight => "BR",
        }
    }
}

/// Steering input: trajectory rotation, yaw step magnitude, half stride.
#[derive(Clone, Copy, Debug)]
pub struct MotionCommand {
    /// Rotation of the travel direction relative to the forward axis, radians.
    pub rho: f64,
    /// Yaw step-length parameter, meters. Feeds the yaw curve directly as its
    /// step length; rate commands must be pre-scaled by the caller.
    pub omega_bar: f64,
    /// Half stride length, meters.
    pub l_span: f64,
}

impl MotionCommand {
    pub fn new(rho: f64, omega_bar: f64, l_span: f64) -> Result<Self> {
        if !(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2).contains(&rho) {
            return Err(Error::Domain(format!("rho {rho} outside [-pi/2, pi/2]")));
        }
        if l_span < 0.0 || !l_span.is_finite() || !omega_bar.is_finite() {
            return Err(Error::Domain("l_span must be >= 0 and finite".into()));
        }
        Ok(Self {
            rho,
            omega_bar,
            l_span,
        })
    }

    /// Straight-ahead command with the given half stride.
    pub fn forward(l_span: f64) -> Self {
        Self {
            rho: 0.0,
            omega_bar: 0.0,
            l_span,
        }
    }
}

/// Gait shape parameters: swing clearance and stance penetration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaitParams {
    /// Foot clearance height above nominal ground, meters.
    pub psi: f64,
    /// Virtual ground penetration depth, meters.
    pub delta: f64,
}

impl GaitParams {
    pub fn new(psi: f64, delta: f64) -> Result<Self> {
        if psi < 0.0 || delta < 0.0 || !psi.is_finite() || !delta.is_finite() {
            return Err(Error::Domain("psi and delta must be >= 0".into()));
        }
        Ok(Self { psi, delta })
    }
}

/// Phase bookkeeping for the trot scheduler.
///
/// The front-left leg's cycle clock wraps every stride; the other legs run on
/// fixed phase lags from it (diagonal pairs in phase, pairs offset by half a
/// stride).
#[derive(Clone, Debug)]
pub struct PhaseClock {
    /// Swing duration, seconds.
    pub t_swing: f64,
    /// Stance duration, seconds.
    pub t_stance: f64,
    /// Seconds since the last front-left cycle reset; wraps every stride.
    pub t_elapse_fl: f64,
}

/// Per-leg phase lags, as a fraction of the stride, for a trot.
pub const TROT_PHASE_LAGS: [f64; 4] = [0.0, 0.5, 0.5, 0.0];

/// Which half of the cycle a leg is in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContactPhase {
    Stance,
    Swing,
}

impl PhaseClock {
    pub fn new(t_swing: f64, t_stance: f64) -> Result<Self> {
        if t_swing <= 0.0 || t_stance <= 0.0 {
            return Err(Error::Domain("t_swing and t_stance must be > 0".into()));
        }
        Ok(Self {
            t_swing,
            t_stance,
            t_elapse_fl: 0.0,
        })
    }

    /// Stride duration (stance + swing), seconds.
    pub fn t_stride(&self) -> f64 {
        self.t_swing + self.t_stance
    }

    /// Advance the front-left clock, wrapping every stride.
    pub fn advance(&mut self, dt: f64) {
        self.t_elapse_fl = (self.t_elapse_fl + dt) % self.t_stride();
    }

    /// Phase of `leg` at the clock's current time.
    pub fn leg_phase(&self, leg: Leg) -> (f64, ContactPhase) {
        leg_phase(self, leg, self.t_elapse_fl)
    }

    /// Phases of all four legs at the clock's current time, each in [0, 2).
    pub fn phases(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for leg in Leg::ALL {
            out[leg.index()] = self.leg_phase(leg).0;
        }
        out
    }
}

/// Per-leg rest foot positions and their stand angles.
#[derive(Clone, Debug)]
pub struct StanceGeometry {
    /// Rest foot position per leg, hip frame, meters.
    pub f_stand: [Vector3<f64>; 4],
}

impl StanceGeometry {
    pub fn new(f_stand: [Vector3<f64>; 4]) -> Self {
        Self { f_stand }
    }

    /// Rest angle for a leg. The per-leg sign case encodes the leg's side,
    /// so the rest position's own lateral sign enters as a magnitude; the
    /// angle flips between the (FR, BL) and (FL, BR) diagonal pairs.
    pub fn phi_stand(&self, leg: Leg) -> f64 {
        let f = self.f_stand[leg.index()];
        let angle = f.y.abs().atan2(f.x);
        match leg {
            Leg::FrontRight | Leg::BackLeft => angle,
            Leg::FrontLeft | Leg::BackRight => -angle,
        }
    }
}

/// A point on a planar gait curve: in-plane travel coordinate and height.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanarPoint {
    /// In-plane travel coordinate, meters.
    pub q: f64,
    /// Vertical coordinate, meters (z up).
    pub z: f64,
}

/// Per-leg 3D foot targets in their hip frames.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FootTargets {
    pub targets: [Vector3<f64>; 4],
}

impl FootTargets {
    pub fn get(&self, leg: Leg) -> Vector3<f64> {
        self.targets[leg.index()]
    }

    /// Flatten to the 12-vector layout [FL xyz, FR xyz, BL xyz, BR xyz].
    pub fn flatten(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for leg in Leg::ALL {
            let p = self.targets[leg.index()];
            out[3 * leg.index()] = p.x;
            out[3 * leg.index() + 1] = p.y;
            out[3 * leg.index() + 2] = p.z;
        }
        out
    }

    pub fn from_flat(flat: &[f64; 12]) -> Self {
        let mut targets = [Vector3::zeros(); 4];
        for (i, t) in targets.iter_mut().enumerate() {
            *t = Vector3::new(flat[3 * i], flat[3 * i + 1], flat[3 * i + 2]);
        }
        Self { targets }
    }
}

/// Previous composed foot positions, used to steer the yaw curve.
///
/// Fresh memory yields a zero yaw step for every leg, so the first composed
/// step is purely translational.
#[derive(Clone, Debug, Default)]
pub struct YawMemory {
    prev: Option<[Vector3<f64>; 4]>,
}

impl YawMemory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Yaw step for a leg: previous composed position relative to the rest
    /// position, or zero on the first step.
    pub fn yaw_step(&self, leg: Leg, stance: &StanceGeometry) -> Vector3<f64> {
        match &self.prev {
            Some(prev) => prev[leg.index()] - stance.f_stand[leg.index()],
            None => Vector3::zeros(),
        }
    }

    fn record(&mut self, targets: &FootTargets) {
        self.prev = Some(targets.targets);
    }
}

/// Bernstein basis polynomial of degree `n`, index `k`, evaluated at `s`.
pub fn bernstein_basis(n: usize, k: usize, s: f64) -> Result<f64> {
    if k > n {
        return Err(Error::Domain(format!("basis index {k} exceeds degree {n}")));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("basis parameter {s} outside [0, 1]")));
    }
    Ok(binomial(n, k) * (1.0 - s).powi((n - k) as i32) * s.powi(k as i32))
}

/// Binomial coefficient as f64, exact for the small degrees used here.
fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Swing control points scaled by step length `tau` and clearance `psi`.
///
/// Endpoints interpolate the stance sweep: c0 = (-tau, 0), c11 = (tau, 0).
/// The 1.4/1.5 overshoot tails on both sides slow the foot's travel speed
/// near lift-off and touchdown so it lands sweeping backward, roughly
/// matching ground speed instead of skidding forward.
pub fn swing_control_points(tau: f64, psi: f64) -> [PlanarPoint; SWING_DEGREE + 1] {
    let p = |q: f64, z: f64| PlanarPoint { q, z };
    [
        p(-tau, 0.0),
        p(-1.4 * tau, 0.0),
        p(-1.5 * tau, 0.9 * psi),
        p(-1.5 * tau, 0.9 * psi),
        p(-1.5 * tau, 0.9 * psi),
        p(0.0, 0.9 * psi),
        p(0.0, 0.9 * psi),
        p(0.0, 1.1 * psi),
        p(1.5 * tau, 1.1 * psi),
        p(1.5 * tau, 1.1 * psi),
        p(1.4 * tau, 0.0),
        p(tau, 0.0),
    ]
}

/// Stance sweep at phase `s` in [0, 1): a linear travel from +tau to -tau
/// with a sinusoidal press to depth `delta` below nominal ground.
///
/// The curve's height factor is cos(pi (1 - 2s) / 2) after cancelling the
/// step length, so a zero `tau` is well defined.
pub fn stance_curve(s: f64, tau: f64, delta: f64) -> Result<PlanarPoint> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::Domain(format!("stance phase {s} outside [0, 1)")));
    }
    let u = 1.0 - 2.0 * s;
    Ok(PlanarPoint {
        q: tau * u,
        z: -delta * (std::f64::consts::FRAC_PI_2 * u).cos(),
    })
}

/// Swing arc at phase `s` in [1, 2): the degree-11 Bezier over the scaled
/// control points, evaluated at s - 1.
pub fn swing_curve(s: f64, tau: f64, psi: f64) -> Result<PlanarPoint> {
    if !(1.0..2.0).contains(&s) {
        return Err(Error::Domain(format!("swing phase {s} outside [1, 2)")));
    }
    let u = s - 1.0;
    let points = swing_control_points(tau, psi);
    let mut q = 0.0;
    let mut z = 0.0;
    for (k, c) in points.iter().enumerate() {
        let b = bernstein_basis(SWING_DEGREE, k, u)?;
        q += b * c.q;
        z += b * c.z;
    }
    Ok(PlanarPoint { q, z })
}

/// Full closed trajectory: stance for s in [0, 1), swing for s in [1, 2).
pub fn trajectory_point(s: f64, tau: f64, params: &GaitParams) -> Result<PlanarPoint> {
    if (0.0..1.0).contains(&s) {
        stance_curve(s, tau, params.delta)
    } else {
        swing_curve(s, tau, params.psi)
    }
}

/// Normalized phase of a leg at front-left elapsed time `t`.
///
/// Stance maps to [0, 1), swing to [1, 2). Each leg's clock runs behind the
/// front-left clock by its trot lag.
pub fn leg_phase(clock: &PhaseClock, leg: Leg, t: f64) -> (f64, ContactPhase) {
    let t_stride = clock.t_stride();
    let t_leg = (t - TROT_PHASE_LAGS[leg.index()] * t_stride).rem_euclid(t_stride);
    if t_leg < clock.t_stance {
        (t_leg / clock.t_stance, ContactPhase::Stance)
    } else {
        (
            1.0 + (t_leg - clock.t_stance) / clock.t_swing,
            ContactPhase::Swing,
        )
    }
}

/// Translation angle of a leg for the current yaw step.
///
/// The previous step direction plus the leg's rest angle, rotated a quarter
/// turn so the yaw curve runs tangent to the turning circle. A vanishing yaw
/// step leaves the direction at the rest angle alone.
pub fn compute_phi_arc(leg: Leg, yaw_memory: &YawMemory, stance: &StanceGeometry) -> f64 {
    let g = yaw_memory.yaw_step(leg, stance);
    let g_ang = if g.xy().norm() < YAW_STEP_EPS {
        0.0
    } else {
        g.y.atan2(g.x)
    };
    g_ang + stance.phi_stand(leg) + std::f64::consts::FRAC_PI_2
}

/// Compose per-leg 3D foot targets from the translation and yaw curves.
///
/// Per leg: the planar trajectory is evaluated twice, with the half stride
/// and with the yaw step magnitude as step lengths. The translation curve is
/// rotated by `rho`, the yaw curve by the leg's arc angle, and both are
/// offset by the rest position. The height profile enters once, through the
/// translation curve; the yaw curve contributes its in-plane coordinate
/// only, so the composed swing apex stays bounded by the clearance no
/// matter the yaw command. The composed targets are recorded in
/// `yaw_memory` for the next yaw step.
pub fn compose_foot_targets(
    cmd: &MotionCommand,
    params: &GaitParams,
    clock: &PhaseClock,
    stance: &StanceGeometry,
    yaw_memory: &mut YawMemory,
    t: f64,
) -> Result<FootTargets> {
    let mut targets = [Vector3::zeros(); 4];
    for leg in Leg::ALL {
        let (s, _) = leg_phase(clock, leg, t);
        let tr = trajectory_point(s, cmd.l_span, params)?;
        let yaw = trajectory_point(s, cmd.omega_bar, params)?;
        let phi_arc = compute_phi_arc(leg, yaw_memory, stance);

        let f_tr = Vector3::new(tr.q * cmd.rho.cos(), tr.q * cmd.rho.sin(), tr.z);
        let f_yaw = Vector3::new(yaw.q * phi_arc.cos(), yaw.q * phi_arc.sin(), 0.0);
        targets[leg.index()] = f_tr + f_yaw + stance.f_stand[leg.index()];
    }
    let out = FootTargets { targets };
    yaw_memory.record(&out);
    Ok(out)
}
