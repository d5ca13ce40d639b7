//! Per-episode environment randomization: link masses, foot friction, and
//! terrain roughness, each drawn fresh for every training episode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::seed::{derive_seed, stream};
use crate::sim::RobotModel;
use crate::terrain::TerrainField;

/// Sampling bounds for one environment draw.
///
/// Masses use a Gaussian with a spread given as a fraction of the nominal
/// value, clipped at three standard deviations and at zero. Friction and
/// mesh magnitude are uniform.
#[derive(Clone, Debug, PartialEq)]
pub struct D2Distribution {
    /// Nominal trunk mass, kg.
    pub base_mass: f64,
    /// Nominal mass of each leg link, kg.
    pub link_mass: f64,
    /// Gaussian spread as a fraction of nominal (0.2 = +/-20%).
    pub mass_spread: f64,
    /// Uniform friction range.
    pub friction: (f64, f64),
    /// Uniform terrain vertex magnitude range, meters.
    pub mesh_magnitude: (f64, f64),
}

impl Default for D2Distribution {
    fn default() -> Self {
        Self {
            base_mass: 1.1,
            link_mass: 0.15,
            mass_spread: 0.2,
            friction: (0.8, 1.5),
            mesh_magnitude: (0.0, 0.08),
        }
    }
}

/// One concrete environment draw.
#[derive(Clone, Debug, PartialEq)]
pub struct D2Sample {
    pub base_mass: f64,
    /// Eight links, two per leg, sampled independently.
    pub link_masses: [f64; 8],
    pub friction: f64,
    pub mesh_magnitude: f64,
    pub terrain_seed: u64,
}

impl D2Distribution {
    /// Draw one sample, deterministic in `seed`.
    pub fn sample(&self, seed: u64) -> D2Sample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gaussian = |rng: &mut ChaCha8Rng, nominal: f64, spread: f64| -> f64 {
            let sigma = nominal * spread;
            if sigma <= 0.0 {
                return nominal;
            }
            let normal = Normal::new(nominal, sigma).expect("valid normal");
            let v: f64 = normal.sample(rng);
            v.clamp(nominal - 3.0 * sigma, nominal + 3.0 * sigma).max(f64::MIN_POSITIVE)
        };
        let base_mass = gaussian(&mut rng, self.base_mass, self.mass_spread);
        let mut link_masses = [0.0; 8];
        for m in &mut link_masses {
            *m = gaussian(&mut rng, self.link_mass, self.mass_spread);
        }
        let friction = if self.friction.1 > self.friction.0 {
            rng.gen_range(self.friction.0..=self.friction.1)
        } else {
            self.friction.0
        };
        let mesh_magnitude = if self.mesh_magnitude.1 > self.mesh_magnitude.0 {
            rng.gen_range(self.mesh_magnitude.0..=self.mesh_magnitude.1)
        } else {
            self.mesh_magnitude.0
        };
        D2Sample {
            base_mass,
            link_masses,
            friction,
            mesh_magnitude,
            terrain_seed: derive_seed(seed, &[stream::TERRAIN]),
        }
    }

    /// The fixed sample used when training without randomization: nominal
    /// masses, mid-range friction and mesh magnitude, and a terrain seed
    /// pinned to the master seed so every epoch sees the same ground.
    pub fn nominal(&self, master_seed: u64) -> D2Sample {
        D2Sample {
            base_mass: self.base_mass,
            link_masses: [self.link_mass; 8],
            friction: (self.friction.0 + self.friction.1) / 2.0,
            mesh_magnitude: (self.mesh_magnitude.0 + self.mesh_magnitude.1) / 2.0,
            terrain_seed: derive_seed(master_seed, &[stream::TERRAIN]),
        }
    }
}

impl D2Sample {
    /// Copy this sample's dynamics onto a robot model.
    pub fn apply_to_model(&self, mut model: RobotModel) -> RobotModel {
        model.base_mass = self.base_mass;
        model.link_masses = self.link_masses;
        model.foot_friction = self.friction;
        model
    }

    /// Generate this sample's terrain over the given extent.
    pub fn generate_terrain(
        &self,
        x_range: (f64, f64),
        y_range: (f64, f64),
        cell: f64,
    ) -> Result<TerrainField> {
        TerrainField::generate(
            self.mesh_magnitude,
            x_range,
            y_range,
            cell,
            1.0,
            self.terrain_seed,
        )
    }

    /// Apply the sample to a model and produce its terrain in one call.
    pub fn apply(
        &self,
        model: RobotModel,
        x_range: (f64, f64),
        y_range: (f64, f64),
        cell: f64,
    ) -> Result<(RobotModel, TerrainField)> {
        let model = self.apply_to_model(model);
        let terrain = self.generate_terrain(x_range, y_range, cell)?;
        Ok((model, terrain))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_stay_in_support() {
        let dist = D2Distribution::default();
        for seed in 0..100_000u64 {
            let s = dist.sample(seed);
            assert!(s.friction >= 0.8 && s.friction <= 1.5, "{}", s.friction);
            assert!(s.mesh_magnitude >= 0.0 && s.mesh_magnitude <= 0.08);
            let sigma = 1.1 * 0.2;
            assert!(s.base_mass >= 1.1 - 3.0 * sigma - 1e-12);
            assert!(s.base_mass <= 1.1 + 3.0 * sigma + 1e-12);
            for &m in &s.link_masses {
                let ls = 0.15 * 0.2;
                assert!(m > 0.0 && m >= 0.15 - 3.0 * ls - 1e-12 && m <= 0.15 + 3.0 * ls + 1e-12);
            }
        }
    }

    #[test]
    fn base_mass_mean_matches_nominal() {
        let dist = D2Distribution::default();
        let n = 100_000;
        let mean: f64 = (0..n).map(|s| dist.sample(s as u64).base_mass).sum::<f64>() / n as f64;
        assert!(
            (mean - 1.1).abs() < 0.011,
            "sample mean {mean} drifted from nominal"
        );
    }

    #[test]
    fn sampling_is_deterministic() {
        let dist = D2Distribution::default();
        assert_eq!(dist.sample(1234), dist.sample(1234));
        assert_ne!(dist.sample(1234), dist.sample(1235));
    }

    #[test]
    fn nominal_sample_sits_mid_range() {
        let dist = D2Distribution::default();
        let s = dist.nominal(7);
        assert_eq!(s.base_mass, 1.1);
        assert_eq!(s.link_masses, [0.15; 8]);
        assert_eq!(s.friction, 1.15);
        assert_eq!(s.mesh_magnitude, 0.04);
        // Same master seed, same fixed terrain.
        assert_eq!(s.terrain_seed, dist.nominal(7).terrain_seed);
    }

    #[test]
    fn apply_is_pass_through_and_idempotent() {
        let dist = D2Distribution {
            friction: (1.5, 1.5),
            mesh_magnitude: (0.0, 0.0),
            mass_spread: 0.0,
            ..D2Distribution::default()
        };
        let s = dist.sample(42);
        assert_eq!(s.friction, 1.5);
        let model = s.apply_to_model(RobotModel::default());
        assert_eq!(model.foot_friction, 1.5);
        assert_eq!(model.base_mass, 1.1);

        // Zero magnitude produces a flat field.
        let terrain = s.generate_terrain((-1.0, 1.0), (-1.0, 1.0), 0.1).unwrap();
        assert_eq!(terrain.height_span(), 0.0);

        // Re-applying the same sample changes nothing.
        let model2 = s.apply_to_model(model.clone());
        assert_eq!(model2.base_mass, model.base_mass);
        assert_eq!(model2.foot_friction, model.foot_friction);
        let terrain2 = s.generate_terrain((-1.0, 1.0), (-1.0, 1.0), 0.1).unwrap();
        assert_eq!(terrain, terrain2);
    }
}
