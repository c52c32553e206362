//! Grip, orientation and position PD loops with policy inversion.
//!
//! One tick: grip PD on the depth sum, orientation PD on the estimated angle,
//! policy inversion of the desired rate, position PD on the contact centroid,
//! then the belt speeds `v_L = omega_c d/2 + v_comp`, `v_R = omega_c d/2 - v_comp`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::estimator::RatioPredictor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Gains {
    pub grip_kp: f64,
    pub grip_kd: f64,
    pub orientation_kp: f64,
    pub orientation_kd: f64,
    pub position_kp: f64,
    pub position_kd: f64,
    /// Depth-sum setpoint, mm px.
    pub s_ref: f64,
    /// Contact-centroid setpoint, mm.
    pub x_center: f64,
    pub v_gap_max: f64,
    pub v_belt_max: f64,
    pub omega_max: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// Control period, s.
    pub dt: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Gains {
            grip_kp: 1e-2,
            grip_kd: 1e-4,
            orientation_kp: 2.0,
            orientation_kd: 0.2,
            position_kp: 1.0,
            position_kd: 0.1,
            s_ref: 800.0,
            x_center: 0.0,
            v_gap_max: 20.0,
            v_belt_max: 20.0,
            omega_max: 1.0,
            u_min: 0.1,
            u_max: 1.5,
            dt: 0.05,
        }
    }
}

impl Gains {
    pub fn validate_with_prefix(&self, prefix: &str) -> Result<()> {
        let check = |key: &str, ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::ConfigRange { key: format!("{prefix}{key}"), msg: msg.into() })
            }
        };
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        let pos = |v: f64| v.is_finite() && v > 0.0;
        check("grip_kp", nonneg(self.grip_kp), "must be >= 0")?;
        check("grip_kd", nonneg(self.grip_kd), "must be >= 0")?;
        check("orientation_kp", nonneg(self.orientation_kp), "must be >= 0")?;
        check("orientation_kd", nonneg(self.orientation_kd), "must be >= 0")?;
        check("position_kp", nonneg(self.position_kp), "must be >= 0")?;
        check("position_kd", nonneg(self.position_kd), "must be >= 0")?;
        check("s_ref", pos(self.s_ref), "must be > 0")?;
        check("x_center", self.x_center.is_finite(), "must be finite")?;
        check("v_gap_max", pos(self.v_gap_max), "must be > 0")?;
        check("v_belt_max", pos(self.v_belt_max), "must be > 0")?;
        check("omega_max", pos(self.omega_max), "must be > 0")?;
        check("u_min", pos(self.u_min), "must be > 0")?;
        check("u_max", self.u_max.is_finite() && self.u_max >= self.u_min, "must be >= u_min")?;
        check("dt", pos(self.dt), "must be > 0")?;
        Ok(())
    }
}

/// PD memories and the latest intermediate signals.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlState {
    pub grip_error: Option<f64>,
    pub orientation_error: Option<f64>,
    pub position_error: Option<f64>,
    pub omega_d: f64,
    pub omega_c: f64,
    pub u: f64,
    pub v_comp: f64,
    pub v_gap: f64,
}

impl ControlState {
    pub fn reset(&mut self) {
        *self = ControlState::default();
    }
}

/// `kp e + kd (e - e_prev) / dt`, no derivative on the first tick.
fn pd(kp: f64, kd: f64, e: f64, prev: &mut Option<f64>, dt: f64) -> f64 {
    let de = prev.map_or(0.0, |p| (e - p) / dt);
    *prev = Some(e);
    kp * e + kd * de
}

/// Gap speed from the depth sum; negative (closing) when `s < s_ref`.
pub fn grip_pd(s: f64, g: &Gains, st: &mut ControlState) -> f64 {
    let e = g.s_ref - s;
    let v = (-pd(g.grip_kp, g.grip_kd, e, &mut st.grip_error, g.dt)).clamp(-g.v_gap_max, g.v_gap_max);
    st.v_gap = v;
    v
}

/// Desired object rate from the orientation error, clamped to `omega_max`.
pub fn orientation_pd(theta_d: f64, theta_hat: f64, g: &Gains, st: &mut ControlState) -> f64 {
    let e = theta_d - theta_hat;
    let w = pd(g.orientation_kp, g.orientation_kd, e, &mut st.orientation_error, g.dt)
        .clamp(-g.omega_max, g.omega_max);
    st.omega_d = w;
    w
}

/// Inverts a predicted ratio `u`: `omega_c = omega_d / clamp(u)`, clamped to
/// `omega_max / u_min`.
pub fn invert_ratio(omega_d: f64, u_raw: f64, g: &Gains, st: &mut ControlState) -> Result<(f64, f64)> {
    if !u_raw.is_finite() {
        return Err(Error::Control(format!("non-finite policy output {u_raw}")));
    }
    let u = u_raw.clamp(g.u_min, g.u_max);
    let limit = g.omega_max / g.u_min;
    let omega_c = (omega_d / u).clamp(-limit, limit);
    st.u = u;
    st.omega_c = omega_c;
    Ok((omega_c, u))
}

/// Policy inversion with network `policy` evaluated on the frame's pooled
/// features and the desired rate.
pub fn policy_invert(
    omega_d: f64,
    pooled: &[f64],
    policy: &dyn RatioPredictor,
    g: &Gains,
    st: &mut ControlState,
) -> Result<(f64, f64)> {
    let u = policy.predict(pooled, omega_d).map_err(|e| match e {
        Error::Model(msg) => Error::Control(msg),
        other => other,
    })?;
    invert_ratio(omega_d, u, g, st)
}

/// Compensation speed pulling the contact centroid to `x_center`.
pub fn position_pd(centroid_x: f64, g: &Gains, st: &mut ControlState) -> f64 {
    let e = g.x_center - centroid_x;
    let lim = 0.5 * g.v_belt_max;
    let v = pd(g.position_kp, g.position_kd, e, &mut st.position_error, g.dt).clamp(-lim, lim);
    st.v_comp = v;
    v
}

/// Unclamped belt speeds realizing `omega_c` on diameter `d_obj` plus a
/// translation `v_comp`.
pub fn belt_commands_unclamped(omega_c: f64, d_obj: f64, v_comp: f64) -> Result<(f64, f64)> {
    if !(d_obj > 0.0) {
        return domain(format!("d_obj must be > 0, got {d_obj}"));
    }
    let roll = 0.5 * omega_c * d_obj;
    Ok((roll + v_comp, roll - v_comp))
}

/// Belt speeds clamped to `+-v_belt_max`.
pub fn belt_commands(omega_c: f64, d_obj: f64, v_comp: f64, g: &Gains) -> Result<(f64, f64)> {
    let (l, r) = belt_commands_unclamped(omega_c, d_obj, v_comp)?;
    Ok((l.clamp(-g.v_belt_max, g.v_belt_max), r.clamp(-g.v_belt_max, g.v_belt_max)))
}

/// How the desired rate is turned into a commanded rate.
#[derive(Clone, Copy)]
pub enum Policy<'a> {
    /// `u = 1`.
    Identity,
    Network(&'a dyn RatioPredictor),
    /// An externally supplied ratio for this tick.
    Given(f64),
}

/// Inputs of one control tick. `centroid_x` and `d_obj` are the held values
/// from the tactile summary.
#[derive(Debug, Clone, Copy)]
pub struct TickInput<'a> {
    pub theta_d: f64,
    pub theta_hat: f64,
    pub depth_sum: f64,
    pub centroid_x: f64,
    pub d_obj: f64,
    pub pooled: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickOutput {
    pub v_left: f64,
    pub v_right: f64,
    pub v_gap: f64,
}

/// One control tick: grip, orientation, policy, position, belts.
pub fn control_step(input: &TickInput, g: &Gains, policy: Policy, st: &mut ControlState) -> Result<TickOutput> {
    let v_gap = grip_pd(input.depth_sum, g, st);
    let omega_d = orientation_pd(input.theta_d, input.theta_hat, g, st);
    match policy {
        Policy::Identity => invert_ratio(omega_d, 1.0, g, st)?,
        Policy::Given(u) => invert_ratio(omega_d, u, g, st)?,
        Policy::Network(p) => policy_invert(omega_d, input.pooled, p, g, st)?,
    };
    let v_comp = position_pd(input.centroid_x, g, st);
    let (v_left, v_right) = belt_commands(st.omega_c, input.d_obj, v_comp, g)?;
    let out = TickOutput { v_left, v_right, v_gap };
    if ![out.v_left, out.v_right, out.v_gap].iter().all(|v| v.is_finite()) {
        return Err(Error::Control(format!("non-finite command {out:?}")));
    }
    Ok(out)
}
