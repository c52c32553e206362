//! Data collection, train/test split, offline and online evaluation, metrics.

pub mod eval;
pub mod frame;
pub mod metrics;
pub mod rollout;

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::Gains;
use crate::error::{Error, Result};
use crate::learning::{canonical_input, half_turn_pooled, Role, Sample, POOLED_LEN};
use crate::world::{library_object, WorldConfig, NOVEL_IDS, TRAINED_IDS};

pub use eval::{eval_offline, eval_online, EvalReport, OfflineEntry, OnlineEntry, OnlineMode};
pub use frame::{Frame, RolloutStatus, Trajectory};
pub use metrics::{desired_trajectory, mean_abs_error, rms_jerk, rmse};
pub use rollout::{run, run_with_snapshots, DepthSnapshot, Driver, Estimation, Inversion, RolloutSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    /// Constant collection rates, rad/s.
    pub speeds: Vec<f64>,
    /// Index into `speeds` used for the single novel-object rollout.
    pub novel_speed_index: usize,
    /// Online sinusoid amplitude, degrees.
    pub amplitude_deg: f64,
    /// Online sinusoid period, s.
    pub period: f64,
    /// Online duration in periods.
    pub periods: f64,
    /// Grip-only phase before each rollout's motion starts, s.
    pub settle_s: f64,
    /// Initial penetration per side at the first frame, mm.
    pub initial_penetration: f64,
    /// A constant-rate rollout fails after this multiple of its nominal
    /// revolution time.
    pub timeout_factor: f64,
    /// EMA weight of the filtered belt speeds; 0 disables the filter.
    pub velocity_ema: f64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            speeds: vec![0.2, 0.35, 0.5, 0.65],
            novel_speed_index: 1,
            amplitude_deg: 180.0,
            period: 40.0,
            periods: 2.0,
            settle_s: 1.0,
            initial_penetration: 0.3,
            timeout_factor: 3.0,
            velocity_ema: 0.0,
        }
    }
}

impl HarnessConfig {
    pub fn validate_with_prefix(&self, prefix: &str) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(Error::ConfigRange { key: format!("{prefix}{key}"), msg: msg.into() });
        if self.speeds.is_empty() {
            return bad("speeds", "needs at least one speed");
        }
        if self.speeds.iter().any(|w| !(w.is_finite() && *w != 0.0 && w.abs() <= 5.0)) {
            return bad("speeds", "each must be finite, nonzero and within +-5 rad/s");
        }
        if self.novel_speed_index >= self.speeds.len() {
            return bad("novel_speed_index", "must index into speeds");
        }
        if !(self.amplitude_deg.is_finite() && self.amplitude_deg >= 0.0) {
            return bad("amplitude_deg", "must be >= 0");
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return bad("period", "must be > 0");
        }
        if !(self.periods.is_finite() && self.periods > 0.0) {
            return bad("periods", "must be > 0");
        }
        if !(self.settle_s.is_finite() && self.settle_s >= 0.0) {
            return bad("settle_s", "must be >= 0");
        }
        if !(self.initial_penetration.is_finite() && self.initial_penetration > 0.0) {
            return bad("initial_penetration", "must be > 0");
        }
        if !(self.timeout_factor.is_finite() && self.timeout_factor >= 1.0) {
            return bad("timeout_factor", "must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.velocity_ema) {
            return bad("velocity_ema", "must be in [0, 1]");
        }
        Ok(())
    }
}

/// One collection rollout to run.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectJob {
    pub object: String,
    pub omega: f64,
    pub profile: String,
    pub seed: u64,
}

/// Profile id of a constant-rate rollout, e.g. `w0.35`.
pub fn profile_id(omega: f64) -> String {
    format!("w{omega:.2}")
}

fn job_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The collection plan: every speed on each trained object, one speed on
/// each novel object, in fixed order. Job seeds derive from `seed`.
pub fn collect_plan(objects: &[&str], h: &HarnessConfig, seed: u64) -> Vec<CollectJob> {
    let mut jobs = Vec::new();
    for id in objects {
        let speeds: Vec<f64> = if NOVEL_IDS.contains(id) {
            vec![h.speeds[h.novel_speed_index.min(h.speeds.len() - 1)]]
        } else {
            h.speeds.clone()
        };
        for w in speeds {
            let job = job_seed(seed, jobs.len() as u64);
            jobs.push(CollectJob { object: id.to_string(), omega: w, profile: profile_id(w), seed: job });
        }
    }
    jobs
}

/// Runs the constant-rate rollouts of `objects` (rayon, results in plan
/// order). Failed rollouts are returned with their partial logs.
pub fn collect(
    objects: &[&str],
    world: &WorldConfig,
    gains: &Gains,
    h: &HarnessConfig,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    Ok(collect_with_snapshots(objects, world, gains, h, seed, None)?.into_iter().map(|(t, _)| t).collect())
}

/// As [`collect`], also keeping every `snapshot_every`-th pair of depth maps.
pub fn collect_with_snapshots(
    objects: &[&str],
    world: &WorldConfig,
    gains: &Gains,
    h: &HarnessConfig,
    seed: u64,
    snapshot_every: Option<usize>,
) -> Result<Vec<(Trajectory, Vec<DepthSnapshot>)>> {
    let plan = collect_plan(objects, h, seed);
    let shapes = plan
        .iter()
        .map(|j| {
            library_object(&j.object)
                .map(Arc::new)
                .ok_or_else(|| Error::Domain(format!("unknown object {:?}", j.object)))
        })
        .collect::<Result<Vec<_>>>()?;
    plan.par_iter()
        .zip(shapes)
        .map(|(job, shape)| {
            let spec = RolloutSpec {
                object: shape,
                profile: job.profile.clone(),
                seed: job.seed,
                driver: Driver::Constant { omega: job.omega },
                estimation: Estimation::Raw,
                inversion: Inversion::Identity,
            };
            rollout::run_with_snapshots(&spec, world, gains, h, snapshot_every)
        })
        .collect()
}

/// All library objects in report order.
pub fn all_object_ids() -> Vec<&'static str> {
    TRAINED_IDS.iter().chain(NOVEL_IDS.iter()).copied().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<Trajectory>,
    pub test: Vec<Trajectory>,
}

/// Per trained object, a seeded choice of 3 training and 1 test trajectory;
/// novel objects go to test only. Output order follows the input order.
pub fn split(dataset: &[Trajectory], seed: u64) -> Result<Split> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for id in TRAINED_IDS {
        let idx: Vec<usize> = (0..dataset.len()).filter(|&i| dataset[i].object == id).collect();
        if idx.len() != 4 {
            return Err(Error::Dataset(format!("object {id} has {} trajectories, expected 4", idx.len())));
        }
        let held_out = idx[rng.random_range(0..idx.len())];
        for i in idx {
            if i == held_out {
                test.push(dataset[i].clone());
            } else {
                train.push(dataset[i].clone());
            }
        }
    }
    for t in dataset {
        if NOVEL_IDS.contains(&t.object.as_str()) {
            test.push(t.clone());
        } else if !TRAINED_IDS.contains(&t.object.as_str()) {
            return Err(Error::Dataset(format!("unknown object {:?} in dataset", t.object)));
        }
    }
    Ok(Split { train, test })
}

/// Supervised samples from a trajectory.
///
/// Both roles regress the rate ratio `omega_gt / omega_c`. `N` sees the
/// frame's features with the measured command rate of the period ending at
/// that frame. `pi` sees the frame's features with the rate achieved over the
/// following period, and is labelled with that period's ratio, matching how
/// it is queried before a command is issued.
pub fn samples_from(traj: &Trajectory, role: Role, omega_max: f64) -> Vec<Sample> {
    let n = traj.frames.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let (src, scalar) = match role {
            Role::N => (k, traj.frames[k].omega_c),
            Role::Pi => {
                if k + 1 >= n {
                    break;
                }
                (k + 1, traj.frames[k + 1].omega_gt)
            }
        };
        let f = &traj.frames[src];
        if f.tactile_valid < 0.5 || f.omega_c == 0.0 {
            continue;
        }
        let label = f.label();
        if !label.is_finite() {
            continue;
        }
        out.push(Sample {
            features: canonical_input(&traj.pooled[k], scalar, omega_max),
            label,
            command_omega: f.omega_c,
        });
    }
    out
}

/// Each sample followed by its half-turn counterpart, which has the same
/// scalar channel and label.
pub fn with_half_turns(samples: Vec<Sample>) -> Vec<Sample> {
    let mut out = Vec::with_capacity(2 * samples.len());
    for s in samples {
        let (pooled, scalar) = s.features.split_at(POOLED_LEN);
        let mut features = half_turn_pooled(pooled);
        features.extend_from_slice(scalar);
        let twin = Sample { features, label: s.label, command_omega: s.command_omega };
        out.push(s);
        out.push(twin);
    }
    out
}

/// Samples from many trajectories, in order.
pub fn dataset_samples(trajs: &[Trajectory], role: Role, omega_max: f64) -> Vec<Sample> {
    trajs.iter().flat_map(|t| samples_from(t, role, omega_max)).collect()
}

/// Total frame count.
pub fn frame_count(trajs: &[Trajectory]) -> usize {
    trajs.iter().map(|t| t.frames.len()).sum()
}
