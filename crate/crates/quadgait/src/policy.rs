//! Linear gait-modulation policy and its action mapping.
//!
//! The policy is a single matrix mapping the 12-component observation to 14
//! outputs: twelve per-axis foot residuals and the two gait shape
//! parameters. Raw outputs are clipped to [-1, 1] and affinely remapped to
//! their physical ranges, keeping every command bounded no matter the
//! parameters.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::gait::GaitParams;
use crate::sim::Observation;

pub const OBS_DIM: usize = 12;
pub const ACT_DIM: usize = 14;

/// Policy parameters: one weight per (observation, output) pair.
pub type PolicyMatrix = SMatrix<f64, OBS_DIM, ACT_DIM>;

/// Physical ranges the clipped policy outputs map onto.
#[derive(Clone, Copy, Debug)]
pub struct ActionBounds {
    /// Swing clearance range, meters.
    pub psi_range: (f64, f64),
    /// Stance penetration range, meters.
    pub delta_range: (f64, f64),
    /// Per-axis foot residual limit, meters.
    pub residual_limit: f64,
}

impl Default for ActionBounds {
    fn default() -> Self {
        Self {
            psi_range: (0.005, 0.06),
            delta_range: (0.0, 0.02),
            residual_limit: 0.03,
        }
    }
}

impl ActionBounds {
    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| hi > lo;
        if !ok(self.psi_range) || !ok(self.delta_range) || self.residual_limit <= 0.0 {
            return Err(Error::Config("degenerate action bounds".into()));
        }
        Ok(())
    }

    /// Gait parameters produced by a zero policy output (range midpoints).
    pub fn midpoint_params(&self) -> GaitParams {
        GaitParams {
            psi: (self.psi_range.0 + self.psi_range.1) / 2.0,
            delta: (self.delta_range.0 + self.delta_range.1) / 2.0,
        }
    }
}

/// Raw linear policy output before clipping, theta^T o.
pub fn raw_output(theta: &PolicyMatrix, obs: &Observation) -> [f64; ACT_DIM] {
    let mut out = [0.0; ACT_DIM];
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..OBS_DIM {
            acc += theta[(i, j)] * obs[i];
        }
        *o = acc;
    }
    out
}

/// Evaluate the policy: foot residuals (12, leg-major xyz) plus gait
/// parameters, after clipping and remapping.
pub fn policy_forward(
    theta: &PolicyMatrix,
    obs: &Observation,
    bounds: &ActionBounds,
) -> Result<([f64; 12], GaitParams)> {
    if obs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite observation".into()));
    }
    let raw = raw_output(theta, obs);
    let mut residuals = [0.0; 12];
    for (i, r) in residuals.iter_mut().enumerate() {
        *r = raw[i].clamp(-1.0, 1.0) * bounds.residual_limit;
    }
    let remap = |v: f64, (lo, hi): (f64, f64)| lo + (v.clamp(-1.0, 1.0) + 1.0) / 2.0 * (hi - lo);
    let params = GaitParams {
        psi: remap(raw[12], bounds.psi_range),
        delta: remap(raw[13], bounds.delta_range),
    };
    Ok((residuals, params))
}

/// Per-step reward: forward progress minus posture and rotation penalties.
pub fn step_reward(dx: f64, roll: f64, pitch: f64, omega: &[f64; 3]) -> f64 {
    dx - 10.0 * (roll.abs() + pitch.abs()) - 0.03 * omega.iter().map(|w| w.abs()).sum::<f64>()
}

/// Proportional heading regulator: yaw error to a bounded yaw step command.
pub fn heading_controller(yaw: f64, gain: f64, limit: f64) -> f64 {
    (-gain * yaw).clamp(-limit, limit)
}

/// Write a policy in the plain-text checkpoint format: a header line with
/// rows, columns and format version, then row-major entries one row per
/// line. Floats print with round-trip precision, so save/load is exact.
pub fn save_policy<W: Write>(theta: &PolicyMatrix, mut w: W) -> Result<()> {
    writeln!(w, "{} {} quadgait-policy-v1", OBS_DIM, ACT_DIM)?;
    for i in 0..OBS_DIM {
        let row: Vec<String> = (0..ACT_DIM).map(|j| format!("{}", theta[(i, j)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn save_policy_file(theta: &PolicyMatrix, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    save_policy(theta, std::io::BufWriter::new(f))
}

/// Parse a policy from the plain-text checkpoint format.
pub fn load_policy<R: BufRead>(r: R, source: &str) -> Result<PolicyMatrix> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: source.to_string(),
        line,
        msg,
    };
    let mut lines = r.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty checkpoint".into()))?;
    let header = header?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 || fields[2] != "quadgait-policy-v1" {
        return Err(parse_err(1, format!("unexpected header {header:?}")));
    }
    let rows: usize = fields[0]
        .parse()
        .map_err(|e| parse_err(1, format!("rows: {e}")))?;
    let cols: usize = fields[1]
        .parse()
        .map_err(|e| parse_err(1, format!("cols: {e}")))?;
    if rows != OBS_DIM || cols != ACT_DIM {
        return Err(parse_err(
            1,
            format!("expected {OBS_DIM}x{ACT_DIM} policy, got {rows}x{cols}"),
        ));
    }
    let mut theta = PolicyMatrix::zeros();
    let mut row = 0;
    for (lineno, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if row >= OBS_DIM {
            return Err(parse_err(lineno + 1, "too many rows".into()));
        }
        let entries: Vec<&str> = line.split_whitespace().collect();
        if entries.len() != ACT_DIM {
            return Err(parse_err(
                lineno + 1,
                format!("expected {ACT_DIM} entries, got {}", entries.len()),
            ));
        }
        for (j, tok) in entries.iter().enumerate() {
            theta[(row, j)] = tok
                .parse()
                .map_err(|e| parse_err(lineno + 1, format!("entry {tok:?}: {e}")))?;
        }
        row += 1;
    }
    if row != OBS_DIM {
        return Err(parse_err(0, format!("expected {OBS_DIM} rows, got {row}")));
    }
    Ok(theta)
}

pub fn load_policy_file(path: &Path) -> Result<PolicyMatrix> {
    let f = std::fs::File::open(path)?;
    load_policy(std::io::BufReader::new(f), &path.display().to_string())
}
