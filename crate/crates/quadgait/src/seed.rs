//! Deterministic seed derivation.
//!
//! Every random stream in the crate is derived from one master seed so that
//! training runs and evaluation campaigns replay bit-identically regardless
//! of thread count. Derivation uses splitmix64, which has stable output
//! across platforms (std's `DefaultHasher` does not guarantee that).

/// One round of splitmix64.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a sequence of stream labels.
///
/// Labels separate independent uses (e.g. per-epoch direction noise vs.
/// per-epoch environment draws) so streams never collide.
pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    let mut s = splitmix64(master);
    for &l in labels {
        s = splitmix64(s ^ l.wrapping_mul(0xd6e8_feb8_6659_fd93));
    }
    s
}

/// Stream label constants for the training and evaluation harnesses.
pub mod stream {
    /// Per-epoch exploration directions.
    pub const DIRECTIONS: u64 = 1;
    /// Per-epoch environment (dynamics + terrain) draw.
    pub const ENVIRONMENT: u64 = 2;
    /// Per-rollout simulation stream.
    pub const ROLLOUT: u64 = 3;
    /// Per-epoch unperturbed evaluation rollout.
    pub const EVALUATION: u64 = 4;
    /// Per-trial campaign stream.
    pub const TRIAL: u64 = 5;
    /// Terrain vertex noise.
    pub const TERRAIN: u64 = 6;
}
