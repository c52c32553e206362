//! Offline replay evaluation, online tracking evaluation and reports.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::control::Gains;
use crate::error::{Error, Result};
use crate::estimator::{self, NetworkPredictor, OrientationEstimate, RatioPredictor};
use crate::learning::{ModelParams, Role};
use crate::world::{library_object, WorldConfig, NOVEL_IDS};

use super::frame::{RolloutStatus, Trajectory};
use super::metrics::{mean_abs_error, rms_jerk, rmse};
use super::rollout::{self, Driver, Estimation, Inversion, RolloutSpec};
use super::HarnessConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineEntry {
    pub object: String,
    pub profile: String,
    pub novel: bool,
    /// Mean absolute orientation error, degrees.
    pub raw_deg: f64,
    pub rectified_deg: f64,
    pub oracle_deg: f64,
    /// `raw_deg - rectified_deg`.
    pub reduction_deg: f64,
    pub status: RolloutStatus,
}

/// Replays dead reckoning over a logged trajectory with `model` (or `k = 1`
/// when `None`) and returns the estimate after each frame.
pub fn replay(traj: &Trajectory, dt: f64, model: Option<&dyn RatioPredictor>) -> Result<Vec<f64>> {
    let mut est = OrientationEstimate::new();
    let mut out = Vec::with_capacity(traj.frames.len());
    for (f, pooled) in traj.frames.iter().zip(&traj.pooled) {
        est = estimator::update_from_pooled(est, pooled, f.omega_c, dt, model)?;
        out.push(est.theta);
    }
    Ok(out)
}

struct LoggedRatio<'a> {
    traj: &'a Trajectory,
    cursor: std::cell::Cell<usize>,
}

impl RatioPredictor for LoggedRatio<'_> {
    fn predict(&self, _pooled: &[f64], _omega: f64) -> Result<f64> {
        let k = self.cursor.get();
        self.cursor.set(k + 1);
        let f = &self.traj.frames[k];
        Ok(if f.omega_c != 0.0 { f.label() } else { 1.0 })
    }
}

fn degrees(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.to_degrees()).collect()
}

/// Offline evaluation of rectification model `n` on test trajectories.
pub fn eval_offline(n: &ModelParams, tests: &[Trajectory], dt: f64, omega_max: f64) -> Result<Vec<OfflineEntry>> {
    if n.role() != Role::N {
        return Err(Error::Model(format!("offline evaluation needs an N model, got {}", n.role().as_str())));
    }
    let net = NetworkPredictor { model: n, omega_max };
    tests
        .iter()
        .map(|t| {
            if t.frames.is_empty() {
                return Err(Error::Dataset(format!("{} has no frames", t.stem())));
            }
            let gt: Vec<f64> = t.frames.iter().map(|f| f.theta_gt.to_degrees()).collect();
            let raw = degrees(&replay(t, dt, None)?);
            let rect = degrees(&replay(t, dt, Some(&net))?);
            let logged = LoggedRatio { traj: t, cursor: std::cell::Cell::new(0) };
            let oracle = degrees(&replay(t, dt, Some(&logged))?);
            let raw_deg = mean_abs_error(&gt, &raw)?;
            let rectified_deg = mean_abs_error(&gt, &rect)?;
            Ok(OfflineEntry {
                object: t.object.clone(),
                profile: t.profile.clone(),
                novel: NOVEL_IDS.contains(&t.object.as_str()),
                raw_deg,
                rectified_deg,
                oracle_deg: mean_abs_error(&gt, &oracle)?,
                reduction_deg: raw_deg - rectified_deg,
                status: t.status,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OnlineMode {
    /// `k = 1` dead reckoning and `u = 1`, orientation PD still active.
    OpenLoop,
    /// Learned rectification and learned policy inversion.
    Ours,
    /// True ratios for both; a reference for the loop's own lag.
    Oracle,
}

impl OnlineMode {
    pub fn as_str(self) -> &'static str {
        match self {
            OnlineMode::OpenLoop => "open-loop",
            OnlineMode::Ours => "ours",
            OnlineMode::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "open-loop" => Ok(OnlineMode::OpenLoop),
            "ours" => Ok(OnlineMode::Ours),
            "oracle" => Ok(OnlineMode::Oracle),
            _ => Err(Error::Domain(format!("unknown mode {s:?}, expected open-loop, ours or oracle"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineEntry {
    pub object: String,
    pub mode: OnlineMode,
    /// Tracking RMSE of the true orientation, degrees.
    pub rmse_deg: f64,
    /// RMS jerk of the true orientation, deg/s^3.
    pub jerk_gt: f64,
    /// RMS jerk of the estimated orientation, deg/s^3.
    pub jerk_est: f64,
    pub status: RolloutStatus,
    pub note: String,
}

/// Runs one online tracking rollout and scores it over the motion phase.
/// Returns the entry and the logged trajectory.
#[allow(clippy::too_many_arguments)]
pub fn eval_online(
    models: Option<(&ModelParams, &ModelParams)>,
    object: &str,
    mode: OnlineMode,
    seed: u64,
    world: &WorldConfig,
    gains: &Gains,
    h: &HarnessConfig,
) -> Result<(OnlineEntry, Trajectory)> {
    let shape = library_object(object).ok_or_else(|| Error::Domain(format!("unknown object {object:?}")))?;
    let (estimation, inversion) = match mode {
        OnlineMode::OpenLoop => (Estimation::Raw, Inversion::Identity),
        OnlineMode::Oracle => (Estimation::Oracle, Inversion::Oracle),
        OnlineMode::Ours => {
            let (n, pi) = models.ok_or_else(|| Error::Model("mode ours needs trained N and pi models".into()))?;
            if n.role() != Role::N || pi.role() != Role::Pi {
                return Err(Error::Model("model roles must be N and pi".into()));
            }
            (Estimation::Network(n), Inversion::Network(pi))
        }
    };
    let spec = RolloutSpec {
        object: Arc::new(shape),
        profile: format!("online-{}", mode.as_str()),
        seed,
        driver: Driver::Sinusoid { amplitude_deg: h.amplitude_deg, period: h.period, periods: h.periods },
        estimation,
        inversion,
    };
    let traj = rollout::run(&spec, world, gains, h)?;
    let settle = (h.settle_s / world.dt).round() as usize;
    let motion = traj.frames.get(settle..).unwrap_or(&[]);
    let (rmse_deg, jerk_gt, jerk_est) = if motion.len() >= 4 {
        let d: Vec<f64> = motion.iter().map(|f| f.theta_d.to_degrees()).collect();
        let gt: Vec<f64> = motion.iter().map(|f| f.theta_gt.to_degrees()).collect();
        let est: Vec<f64> = motion.iter().map(|f| f.theta_hat.to_degrees()).collect();
        (rmse(&d, &gt)?, rms_jerk(&gt, world.dt)?, rms_jerk(&est, world.dt)?)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    let entry = OnlineEntry {
        object: object.to_string(),
        mode,
        rmse_deg,
        jerk_gt,
        jerk_est,
        status: traj.status,
        note: traj.note.clone(),
    };
    Ok((entry, traj))
}

/// Aggregate statistics of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ReportSummary {
    pub offline_trained_improved: usize,
    pub offline_trained_total: usize,
    pub offline_trained_mean_reduction_deg: Option<f64>,
    pub offline_novel_mean_reduction_deg: Option<f64>,
    pub online_wins: usize,
    pub online_compared: usize,
    pub online_ours_trained_max_rmse_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EvalReport {
    /// Provenance lines (config hash, seed).
    pub provenance: Vec<String>,
    pub offline: Vec<OfflineEntry>,
    pub online: Vec<OnlineEntry>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn fmt(v: f64) -> String {
    format!("{v:.4}")
}

impl EvalReport {
    /// Online comparison: an object counts as a win when both modes ran and
    /// closed loop completed with lower RMSE. Failed closed-loop runs lose.
    pub fn summary(&self) -> ReportSummary {
        let trained: Vec<&OfflineEntry> = self.offline.iter().filter(|e| !e.novel).collect();
        let novel: Vec<f64> = self.offline.iter().filter(|e| e.novel).map(|e| e.reduction_deg).collect();
        let mut wins = 0;
        let mut compared = 0;
        let mut objects: Vec<&str> = Vec::new();
        for e in &self.online {
            if !objects.contains(&e.object.as_str()) {
                objects.push(&e.object);
            }
        }
        for o in &objects {
            let find = |m| self.online.iter().find(|e| e.object == *o && e.mode == m);
            if let (Some(ol), Some(ours)) = (find(OnlineMode::OpenLoop), find(OnlineMode::Ours)) {
                compared += 1;
                let ours_ok = ours.status == RolloutStatus::Complete && ours.rmse_deg.is_finite();
                let ol_failed = ol.status == RolloutStatus::Failed || !ol.rmse_deg.is_finite();
                if ours_ok && (ol_failed || ours.rmse_deg < ol.rmse_deg) {
                    wins += 1;
                }
            }
        }
        let ours_trained: Vec<f64> = self
            .online
            .iter()
            .filter(|e| e.mode == OnlineMode::Ours && !NOVEL_IDS.contains(&e.object.as_str()))
            .map(|e| if e.status == RolloutStatus::Complete { e.rmse_deg } else { f64::INFINITY })
            .collect();
        ReportSummary {
            offline_trained_improved: trained.iter().filter(|e| e.reduction_deg > 0.0).count(),
            offline_trained_total: trained.len(),
            offline_trained_mean_reduction_deg: mean(&trained.iter().map(|e| e.reduction_deg).collect::<Vec<_>>()),
            offline_novel_mean_reduction_deg: mean(&novel),
            online_wins: wins,
            online_compared: compared,
            online_ours_trained_max_rmse_deg: ours_trained.iter().copied().reduce(f64::max),
        }
    }

    /// Structured text: one `key: value` block per entry.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for p in &self.provenance {
            let _ = writeln!(s, "# {p}");
        }
        for e in &self.offline {
            let _ = writeln!(s, "[offline {} {}]", e.object, e.profile);
            let _ = writeln!(s, "novel: {}", e.novel);
            let _ = writeln!(s, "status: {}", e.status.as_str());
            let _ = writeln!(s, "raw_error_deg: {}", fmt(e.raw_deg));
            let _ = writeln!(s, "rectified_error_deg: {}", fmt(e.rectified_deg));
            let _ = writeln!(s, "oracle_error_deg: {}", fmt(e.oracle_deg));
            let _ = writeln!(s, "reduction_deg: {}", fmt(e.reduction_deg));
            let _ = writeln!(s);
        }
        for e in &self.online {
            let _ = writeln!(s, "[online {} {}]", e.object, e.mode.as_str());
            let _ = writeln!(s, "status: {}", e.status.as_str());
            if !e.note.is_empty() {
                let _ = writeln!(s, "note: {}", e.note);
            }
            let _ = writeln!(s, "rmse_deg: {}", fmt(e.rmse_deg));
            let _ = writeln!(s, "rms_jerk_gt_deg_s3: {}", fmt(e.jerk_gt));
            let _ = writeln!(s, "rms_jerk_est_deg_s3: {}", fmt(e.jerk_est));
            let _ = writeln!(s);
        }
        let sm = self.summary();
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), fmt);
        let _ = writeln!(s, "[summary]");
        if !self.offline.is_empty() {
            let _ = writeln!(s, "offline_trained_improved: {}/{}", sm.offline_trained_improved, sm.offline_trained_total);
            let _ = writeln!(s, "offline_trained_mean_reduction_deg: {}", opt(sm.offline_trained_mean_reduction_deg));
            let _ = writeln!(s, "offline_novel_mean_reduction_deg: {}", opt(sm.offline_novel_mean_reduction_deg));
        }
        if !self.online.is_empty() {
            let _ = writeln!(s, "online_wins: {}/{}", sm.online_wins, sm.online_compared);
            let _ = writeln!(s, "online_ours_trained_max_rmse_deg: {}", opt(sm.online_ours_trained_max_rmse_deg));
        }
        s
    }

    /// Machine-readable JSON with the entries and the summary.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            provenance: &'a [String],
            offline: &'a [OfflineEntry],
            online: &'a [OnlineEntry],
            summary: ReportSummary,
        }
        let out = Out { provenance: &self.provenance, offline: &self.offline, online: &self.online, summary: self.summary() };
        let mut s = serde_json::to_string_pretty(&out).expect("report serializes");
        s.push('\n');
        s
    }
}
