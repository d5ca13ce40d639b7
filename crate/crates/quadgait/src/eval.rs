//! Survivability evaluation campaigns: many independent trials on freshly
//! randomized environments, bucketed by distance traveled.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::randomization::{D2Distribution, D2Sample};
use crate::rollout::{episode_rollout, EpisodeParams, PolicySource};
use crate::seed::{derive_seed, stream};

/// Campaign settings.
#[derive(Clone, Debug)]
pub struct EvalCampaignSpec {
    pub trials: usize,
    /// Per-trial step budget.
    pub max_steps: usize,
    /// Distance bucket edges, meters: (near, far) splits distances into
    /// d <= near, near < d < far, d >= far.
    pub buckets: (f64, f64),
    pub master_seed: u64,
    /// Force flat terrain (mesh magnitude zero) for baseline checks.
    pub force_flat: bool,
}

impl Default for EvalCampaignSpec {
    fn default() -> Self {
        Self {
            trials: 100,
            max_steps: 10_000,
            buckets: (5.0, 90.0),
            master_seed: 0,
            force_flat: false,
        }
    }
}

impl EvalCampaignSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("campaign needs at least one trial".into()));
        }
        if !(self.buckets.1 > self.buckets.0 && self.buckets.0 > 0.0) {
            return Err(Error::Config(
                "bucket edges must be positive and increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a single trial.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub sample: D2Sample,
    pub distance: f64,
    pub fell: bool,
    pub steps: usize,
}

/// Aggregated campaign results: per-bucket died/lived counts plus the
/// underlying per-trial records.
#[derive(Clone, Debug)]
pub struct CampaignReport {
    pub buckets: (f64, f64),
    /// counts[bucket] = (died, lived), buckets ordered near, mid, far.
    pub counts: [(usize, usize); 3],
    pub records: Vec<TrialRecord>,
    pub master_seed: u64,
}

impl CampaignReport {
    /// Bucket index for a distance.
    pub fn bucket_of(buckets: (f64, f64), distance: f64) -> usize {
        if distance <= buckets.0 {
            0
        } else if distance < buckets.1 {
            1
        } else {
            2
        }
    }

    /// Build a report from explicit counts (formatting fixtures and tests).
    pub fn from_counts(buckets: (f64, f64), counts: [(usize, usize); 3], master_seed: u64) -> Self {
        Self {
            buckets,
            counts,
            records: Vec::new(),
            master_seed,
        }
    }

    pub fn trials(&self) -> usize {
        self.counts.iter().map(|(d, l)| d + l).sum()
    }

    pub fn survived(&self) -> usize {
        self.counts.iter().map(|(_, l)| l).sum()
    }

    pub fn survival_rate(&self) -> f64 {
        self.survived() as f64 / self.trials() as f64
    }

    /// Lived count in the far bucket.
    pub fn far_lived(&self) -> usize {
        self.counts[2].1
    }

    /// Aligned text table in near/mid/far row order.
    pub fn format_table(&self) -> String {
        let (near, far) = self.buckets;
        let rows = [
            (format!("<= {near}m"), self.counts[0]),
            (format!("{near}m to {far}m"), self.counts[1]),
            (format!(">= {far}m"), self.counts[2]),
        ];
        let mut out = String::new();
        out.push_str(&format!(
            "{:<16} {:>8} {:>8}\n",
            "Distance", "# Died", "# Lived"
        ));
        for (label, (died, lived)) in rows {
            out.push_str(&format!("{label:<16} {died:>8} {lived:>8}\n"));
        }
        out
    }

    /// CSV form of the bucket table.
    pub fn write_bucket_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bucket,died,lived")?;
        let (near, far) = self.buckets;
        writeln!(w, "<={near}m,{},{}", self.counts[0].0, self.counts[0].1)?;
        writeln!(w, "{near}m-{far}m,{},{}", self.counts[1].0, self.counts[1].1)?;
        writeln!(w, ">={far}m,{},{}", self.counts[2].0, self.counts[2].1)?;
        Ok(())
    }

    /// CSV of per-trial outcomes, including each trial's environment draw.
    pub fn write_trials_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# quadgait-campaign v1 master_seed={}", self.master_seed)?;
        writeln!(
            w,
            "trial,seed,distance,fate,steps,base_mass,friction,mesh_magnitude,terrain_seed"
        )?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.index,
                r.seed,
                r.distance,
                if r.fell { "died" } else { "lived" },
                r.steps,
                r.sample.base_mass,
                r.sample.friction,
                r.sample.mesh_magnitude,
                r.sample.terrain_seed,
            )?;
        }
        Ok(())
    }
}

/// Run a campaign: per trial, draw an environment, roll out the policy, and
/// bucket the distance. Deterministic in the master seed; trials execute in
/// parallel and aggregate in index order.
pub fn run_eval_campaign(
    source: &PolicySource,
    spec: &EvalCampaignSpec,
    dist: &D2Distribution,
    params: &EpisodeParams,
) -> Result<CampaignReport> {
    spec.validate()?;
    let records: Result<Vec<TrialRecord>> = (0..spec.trials)
        .into_par_iter()
        .map(|index| {
            let env_seed = derive_seed(spec.master_seed, &[stream::TRIAL, index as u64]);
            let mut sample = dist.sample(env_seed);
            if spec.force_flat {
                sample.mesh_magnitude = 0.0;
            }
            let rollout_seed =
                derive_seed(spec.master_seed, &[stream::TRIAL, index as u64, stream::ROLLOUT]);
            let result =
                episode_rollout(source, &sample, params, rollout_seed, spec.max_steps, None)?;
            Ok(TrialRecord {
                index,
                seed: rollout_seed,
                sample,
                distance: result.distance,
                fell: result.fell,
                steps: result.steps,
            })
        })
        .collect();
    let records = records?;

    let mut counts = [(0usize, 0usize); 3];
    for r in &records {
        let b = CampaignReport::bucket_of(spec.buckets, r.distance);
        if r.fell {
            counts[b].0 += 1;
        } else {
            counts[b].1 += 1;
        }
    }
    Ok(CampaignReport {
        buckets: spec.buckets,
        counts,
        records,
        master_seed: spec.master_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_edges_are_inclusive_low_exclusive_high() {
        let b = (5.0, 90.0);
        assert_eq!(CampaignReport::bucket_of(b, 0.0), 0);
        assert_eq!(CampaignReport::bucket_of(b, 5.0), 0);
        assert_eq!(CampaignReport::bucket_of(b, 5.0001), 1);
        assert_eq!(CampaignReport::bucket_of(b, 89.999), 1);
        assert_eq!(CampaignReport::bucket_of(b, 90.0), 2);
        assert_eq!(CampaignReport::bucket_of(b, -1.0), 0);
    }

    #[test]
    fn fixture_counts_render_verbatim() {
        // Reference survivability distribution used as a formatting fixture.
        let report =
            CampaignReport::from_counts((5.0, 90.0), [(488, 64), (207, 95), (0, 146)], 0);
        let table = report.format_table();
        assert!(table.contains("<= 5m"));
        assert!(table.contains("488"));
        assert!(table.contains("64"));
        assert!(table.contains("207"));
        assert!(table.contains("95"));
        assert!(table.contains("146"));
        assert_eq!(report.trials(), 1000);
        assert_eq!(report.far_lived(), 146);

        let mut csv = Vec::new();
        report.write_bucket_csv(&mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv.contains("<=5m,488,64"));
        assert!(csv.contains("5m-90m,207,95"));
        assert!(csv.contains(">=90m,0,146"));
    }

    #[test]
    fn empty_buckets_render_zero() {
        let report = CampaignReport::from_counts((5.0, 90.0), [(3, 0), (0, 0), (0, 0)], 0);
        let table = report.format_table();
        let mid_line = table
            .lines()
            .find(|l| l.starts_with("5m to 90m"))
            .unwrap();
        assert!(mid_line.contains('0'), "{mid_line}");
    }

    #[test]
    fn campaign_counts_sum_to_trials_and_replay_identically() {
        let spec = EvalCampaignSpec {
            trials: 4,
            max_steps: 120,
            master_seed: 77,
            ..EvalCampaignSpec::default()
        };
        let dist = D2Distribution::default();
        let params = EpisodeParams::default();
        let a = run_eval_campaign(&PolicySource::OpenLoop, &spec, &dist, &params).unwrap();
        assert_eq!(a.trials(), 4);
        assert_eq!(a.records.len(), 4);

        let b = run_eval_campaign(&PolicySource::OpenLoop, &spec, &dist, &params).unwrap();
        assert_eq!(a.counts, b.counts);
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.distance, rb.distance);
            assert_eq!(ra.fell, rb.fell);
        }
    }

    #[test]
    fn flat_single_trial_open_loop_survives() {
        let spec = EvalCampaignSpec {
            trials: 1,
            max_steps: 500,
            master_seed: 3,
            force_flat: true,
            ..EvalCampaignSpec::default()
        };
        let dist = D2Distribution::default();
        let params = EpisodeParams::default();
        let report = run_eval_campaign(&PolicySource::OpenLoop, &spec, &dist, &params).unwrap();
        let r = &report.records[0];
        assert!(!r.fell);
        assert!(r.distance > 0.0);
    }
}
