//! One closed-loop rollout: world, tactile rendering, estimator and
//! controller stepped together at the frame rate, every tick logged.

use std::f64::consts::TAU;
use std::sync::Arc;

use crate::control::{self, ControlState, Gains, Policy, TickInput};
use crate::error::{Error, Result};
use crate::estimator::{self, BeltOdometry, ContactHold, NetworkPredictor, OrientationEstimate, RatioPredictor};
use crate::learning::{self, ModelParams};
use crate::world::{self, render_depth, BeltCommand, DepthMap, ObjectShape, Side, WorldConfig, WorldState};

use super::frame::{Frame, RolloutStatus, Trajectory};
use super::HarnessConfig;

/// What the rollout asks of the object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Driver {
    /// Constant commanded rate (rad/s) after the settle phase until the
    /// object has turned a full revolution.
    Constant { omega: f64 },
    /// Track `A sin(2 pi t / T)` (degrees, seconds) for `periods` periods.
    Sinusoid { amplitude_deg: f64, period: f64, periods: f64 },
}

/// Source of the rate ratio used for dead reckoning.
#[derive(Clone, Copy)]
pub enum Estimation<'a> {
    /// `k = 1`.
    Raw,
    Network(&'a ModelParams),
    /// The true ratio of the last period.
    Oracle,
}

/// Source of the ratio used to invert the desired rate.
#[derive(Clone, Copy)]
pub enum Inversion<'a> {
    /// `u = 1`.
    Identity,
    Network(&'a ModelParams),
    /// The ratio a trial step with `u = 1` would achieve.
    Oracle,
}

pub struct RolloutSpec<'a> {
    pub object: Arc<ObjectShape>,
    pub profile: String,
    pub seed: u64,
    pub driver: Driver,
    pub estimation: Estimation<'a>,
    pub inversion: Inversion<'a>,
}

fn lost(e: Error) -> std::result::Result<String, Error> {
    match e {
        Error::ObjectLost(msg) => Ok(msg),
        other => Err(other),
    }
}

/// Depth maps rendered at one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthSnapshot {
    pub frame: usize,
    pub left: DepthMap,
    pub right: DepthMap,
}

/// Runs one rollout. Losing the object ends it early with a `Failed` status;
/// other errors propagate.
pub fn run(spec: &RolloutSpec, world_cfg: &WorldConfig, gains: &Gains, h: &HarnessConfig) -> Result<Trajectory> {
    Ok(run_with_snapshots(spec, world_cfg, gains, h, None)?.0)
}

/// As [`run`], also returning the depth maps of every `snapshot_every`-th
/// frame.
pub fn run_with_snapshots(
    spec: &RolloutSpec,
    world_cfg: &WorldConfig,
    gains: &Gains,
    h: &HarnessConfig,
    snapshot_every: Option<usize>,
) -> Result<(Trajectory, Vec<DepthSnapshot>)> {
    let mut snapshots = Vec::new();
    let cfg = WorldConfig { seed: spec.seed, ..world_cfg.clone() };
    let dt = cfg.dt;
    let mut state = WorldState::grasped(spec.object.clone(), h.initial_penetration, &cfg)?;
    let ema = (h.velocity_ema > 0.0).then_some(h.velocity_ema);
    let mut odometry = BeltOdometry::new(cfg.belt_transmission, ema);
    let mut hold = ContactHold::default();
    let mut est = OrientationEstimate::new();
    let mut ctrl = ControlState::default();
    let settle = (h.settle_s / dt).round() as usize;
    let max_steps = settle
        + match spec.driver {
            Driver::Constant { omega } => (h.timeout_factor * TAU / omega.abs() / dt).ceil() as usize,
            Driver::Sinusoid { period, periods, .. } => (period * periods / dt).round() as usize,
        };
    let n_net = match spec.estimation {
        Estimation::Network(m) => Some(NetworkPredictor { model: m, omega_max: gains.omega_max }),
        _ => None,
    };
    let pi_net = match spec.inversion {
        Inversion::Network(m) => Some(NetworkPredictor { model: m, omega_max: gains.omega_max }),
        _ => None,
    };
    let mut traj = Trajectory {
        object: spec.object.id().to_string(),
        profile: spec.profile.clone(),
        seed: spec.seed,
        status: RolloutStatus::Complete,
        note: String::new(),
        frames: Vec::with_capacity(max_steps + 1),
        pooled: Vec::with_capacity(max_steps + 1),
    };
    let fail = |traj: &mut Trajectory, note: String| {
        traj.status = RolloutStatus::Failed;
        traj.note = note;
    };

    for k in 0..=max_steps {
        let t = k as f64 * dt;
        let left = render_depth(&state, Side::Left, &cfg);
        let right = render_depth(&state, Side::Right, &cfg);
        if snapshot_every.is_some_and(|n| n > 0 && k % n == 0) {
            snapshots.push(DepthSnapshot { frame: k, left: left.clone(), right: right.clone() });
        }
        let enc = state.encoders.read(cfg.encoder_counts);
        let gap = cfg.gap_from_motor(enc.theta_g);
        let summary = estimator::summarize(&left, &right, gap)?;
        let pooled = learning::pool_pair(&left, &right, cfg.d_max)?;
        let speeds = odometry.update(enc, dt);
        let (centroid_x, d_obj) = match hold.update(&summary) {
            Ok(v) => v,
            Err(e) => {
                fail(&mut traj, lost(e)?);
                break;
            }
        };
        let omega_c = estimator::command_omega(speeds.v_left, speeds.v_right, d_obj)?;
        let oracle_ratio = if omega_c.abs() > 1e-9 { state.omega / omega_c } else { 1.0 };
        let oracle_k = OracleRatio(oracle_ratio);
        let rectifier: Option<&dyn RatioPredictor> = match spec.estimation {
            Estimation::Raw => None,
            Estimation::Network(_) => n_net.as_ref().map(|p| p as &dyn RatioPredictor),
            Estimation::Oracle => Some(&oracle_k),
        };
        est = estimator::update_from_pooled(est, &pooled, omega_c, dt, rectifier)?;

        let settling = k < settle;
        let tau = t - settle as f64 * dt;
        let mut frame = Frame {
            t,
            theta_g: enc.theta_g,
            theta_l: enc.theta_l,
            theta_r: enc.theta_r,
            v_left: speeds.v_left,
            v_right: speeds.v_right,
            v_left_filtered: speeds.v_left_filtered,
            v_right_filtered: speeds.v_right_filtered,
            gap,
            depth_sum: summary.depth_sum,
            centroid_x: summary.centroid_x,
            d_obj: summary.d_obj,
            tactile_valid: if summary.valid { 1.0 } else { 0.0 },
            omega_c,
            theta_gt: state.pose.theta,
            omega_gt: state.omega,
            x_gt: state.pose.x,
            theta_hat: est.theta,
            k_hat: est.k_hat,
            ..Frame::default()
        };

        let cmd = match spec.driver {
            Driver::Constant { omega } => {
                let v_gap = control::grip_pd(summary.depth_sum, gains, &mut ctrl);
                let w = if settling { 0.0 } else { omega };
                let v_comp = control::position_pd(centroid_x, gains, &mut ctrl);
                let (v_left, v_right) = control::belt_commands(w, d_obj, v_comp, gains)?;
                ctrl.omega_d = w;
                ctrl.omega_c = w;
                ctrl.u = 1.0;
                BeltCommand { v_left, v_right, v_gap }
            }
            Driver::Sinusoid { amplitude_deg, period, .. } => {
                let theta_d = if settling {
                    0.0
                } else {
                    super::metrics::desired_trajectory(tau, amplitude_deg, period)?.to_radians()
                };
                frame.theta_d = theta_d;
                let input = TickInput {
                    theta_d,
                    theta_hat: est.theta,
                    depth_sum: summary.depth_sum,
                    centroid_x,
                    d_obj,
                    pooled: &pooled,
                };
                let policy = match spec.inversion {
                    Inversion::Identity => Policy::Identity,
                    Inversion::Network(_) => Policy::Network(pi_net.as_ref().unwrap()),
                    Inversion::Oracle => {
                        let mut trial_ctrl = ctrl;
                        let out = control::control_step(&input, gains, Policy::Identity, &mut trial_ctrl)?;
                        let trial_cmd = BeltCommand { v_left: out.v_left, v_right: out.v_right, v_gap: out.v_gap };
                        let rate = (out.v_left + out.v_right) / d_obj;
                        match world::step(&state, trial_cmd, &cfg) {
                            Ok(next) if rate.abs() > 1e-9 => Policy::Given(next.omega / rate),
                            _ => Policy::Identity,
                        }
                    }
                };
                let out = control::control_step(&input, gains, policy, &mut ctrl)?;
                BeltCommand { v_left: out.v_left, v_right: out.v_right, v_gap: out.v_gap }
            }
        };
        frame.omega_d = ctrl.omega_d;
        frame.u = ctrl.u;
        frame.v_comp = ctrl.v_comp;
        frame.v_gap = cmd.v_gap;
        frame.v_left_cmd = cmd.v_left;
        frame.v_right_cmd = cmd.v_right;
        traj.frames.push(frame);
        traj.pooled.push(pooled);

        if let Driver::Constant { .. } = spec.driver {
            if !settling && state.pose.theta.abs() >= TAU {
                break;
            }
            if k == max_steps {
                fail(&mut traj, "timed out before a full revolution".into());
                break;
            }
        }
        if k == max_steps {
            break;
        }
        if let Err(e) = world::step_in_place(&mut state, cmd, &cfg) {
            fail(&mut traj, lost(e)?);
            break;
        }
    }
    Ok((traj, snapshots))
}

struct OracleRatio(f64);

impl RatioPredictor for OracleRatio {
    fn predict(&self, _pooled: &[f64], _omega: f64) -> Result<f64> {
        Ok(self.0)
    }
}
