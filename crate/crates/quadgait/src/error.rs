//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the gait, kinematics, simulation, and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A foot target cannot be reached by the leg. Carries the nearest
    /// reachable point so callers can clamp instead of aborting.
    #[error("target ({x:.4}, {y:.4}, {z:.4}) out of reach; nearest ({nx:.4}, {ny:.4}, {nz:.4})")]
    OutOfReach {
        x: f64,
        y: f64,
        z: f64,
        nx: f64,
        ny: f64,
        nz: f64,
    },

    /// Invalid robot, simulation, or campaign configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Height query outside the terrain extent.
    #[error("terrain query ({x:.3}, {y:.3}) outside field extent")]
    TerrainQuery { x: f64, y: f64 },

    /// The integrator produced a non-finite state; the episode must end.
    #[error("simulation diverged at step {step}")]
    Diverged { step: usize },

    /// Malformed on-disk artifact (checkpoint, terrain dump, trajectory log).
    #[error("parse error in {path} at line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
