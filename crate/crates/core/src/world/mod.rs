//! Deterministic planar simulation of an object squeezed between two parallel
//! active belt surfaces.
//!
//! Frame: x runs along the belts, y across the gap. The left belt plane is
//! `y = -g/2`, the right one `y = +g/2`; the object angle is counter-clockwise
//! positive. Belt speeds are given in each sensor's own frame, signed so that a
//! positive speed on either belt rolls the object counter-clockwise: the left
//! surface moves along `+x` at `v_L`, the right surface along `-x` at `v_R`.
//! Rolling without slip then gives `omega = (v_L + v_R) / d_obj`.

pub mod contact;
pub mod render;
pub mod shape;
mod solver;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub use contact::{column_x, contact, ContactSummary, DeepestPair, Side};
pub use render::{render_depth, write_pgm, DepthMap};
pub use shape::{build_object_library, library_object, ObjectShape, Outline, ShapeSpec, NOVEL_IDS, TRAINED_IDS};

use contact::Envelope;
use solver::{FrictionParams, PlanarVelocity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    /// Normal stiffness, N/mm of penetration per mm of contact length.
    pub k_n: f64,
    pub mu: f64,
    /// Rotational damping, N mm s.
    pub c_rot: f64,
    /// Translational damping along the belts, N s/mm.
    pub c_trans: f64,
    /// Control/frame period, s.
    pub dt: f64,
    pub substeps: u32,
    /// Depth-map saturation, mm.
    pub d_max: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Belt travel per motor radian, mm/rad.
    pub belt_transmission: f64,
    /// Gap change per gripper-motor radian, mm/rad.
    pub gap_transmission: f64,
    /// Gap at gripper-motor angle zero, mm.
    pub gap_offset: f64,
    /// The gripper cannot close below this gap, mm.
    pub min_gap: f64,
    /// Relative slip speed below which a sample sticks, mm/s.
    pub stick_speed: f64,
    /// Slip speed scale of the tanh friction regularization, mm/s.
    pub friction_smoothing: f64,
    pub map_width: usize,
    pub map_height: usize,
    /// Pixel pitch, mm.
    pub pixel_pitch: f64,
    /// Extrusion depth of the object along the map rows, mm.
    pub object_thickness: f64,
    /// Encoder resolution in counts per revolution; 0 reads exact angles.
    pub encoder_counts: u32,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            k_n: 5.0,
            mu: 0.8,
            c_rot: 0.5,
            c_trans: 0.01,
            dt: 0.05,
            substeps: 10,
            d_max: 1.5,
            noise_sigma: 0.01,
            seed: 0,
            belt_transmission: 5.0,
            gap_transmission: 1.0,
            gap_offset: 0.0,
            min_gap: 1.0,
            stick_speed: 0.1,
            friction_smoothing: 0.02,
            map_width: 115,
            map_height: 86,
            pixel_pitch: 0.4,
            object_thickness: 20.0,
            encoder_counts: 0,
        }
    }
}

fn range(key: &str, ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::ConfigRange { key: key.to_string(), msg: msg.to_string() })
    }
}

impl WorldConfig {
    /// Validates ranges; `prefix` is prepended to key names in errors.
    pub fn validate_with_prefix(&self, prefix: &str) -> Result<()> {
        let k = |name: &str| format!("{prefix}{name}");
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        range(&k("k_n"), pos(self.k_n), "must be > 0")?;
        range(&k("mu"), nonneg(self.mu), "must be >= 0")?;
        range(&k("c_rot"), pos(self.c_rot), "must be > 0")?;
        range(&k("c_trans"), pos(self.c_trans), "must be > 0")?;
        range(&k("dt"), pos(self.dt), "must be > 0")?;
        range(&k("substeps"), self.substeps >= 1, "must be >= 1")?;
        range(&k("d_max"), pos(self.d_max), "must be > 0")?;
        range(&k("noise_sigma"), nonneg(self.noise_sigma), "must be >= 0")?;
        range(&k("belt_transmission"), pos(self.belt_transmission), "must be > 0")?;
        range(&k("gap_transmission"), pos(self.gap_transmission), "must be > 0")?;
        range(&k("gap_offset"), self.gap_offset.is_finite(), "must be finite")?;
        range(&k("min_gap"), pos(self.min_gap), "must be > 0")?;
        range(&k("stick_speed"), nonneg(self.stick_speed), "must be >= 0")?;
        range(&k("friction_smoothing"), pos(self.friction_smoothing), "must be > 0")?;
        range(&k("map_width"), (2..=4096).contains(&self.map_width), "must be in [2, 4096]")?;
        range(&k("map_height"), (1..=4096).contains(&self.map_height), "must be in [1, 4096]")?;
        range(&k("pixel_pitch"), pos(self.pixel_pitch), "must be > 0")?;
        range(&k("object_thickness"), pos(self.object_thickness), "must be > 0")?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with_prefix("")
    }

    /// Half the sensor length along x, mm.
    pub fn half_width(&self) -> f64 {
        0.5 * self.map_width as f64 * self.pixel_pitch
    }

    pub fn gap_from_motor(&self, theta_g: f64) -> f64 {
        self.gap_offset + self.gap_transmission * theta_g
    }

    pub fn motor_from_gap(&self, gap: f64) -> f64 {
        (gap - self.gap_offset) / self.gap_transmission
    }

    fn friction(&self) -> FrictionParams {
        FrictionParams {
            stiffness: self.k_n,
            mu: self.mu,
            smoothing: self.friction_smoothing,
            stick_speed: self.stick_speed,
            c_trans: self.c_trans,
            c_rot: self.c_rot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    /// Unwrapped orientation, rad.
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EncoderState {
    pub theta_g: f64,
    pub theta_l: f64,
    pub theta_r: f64,
}

impl EncoderState {
    /// Encoder readout, quantized when `counts > 0`.
    pub fn read(&self, counts: u32) -> EncoderState {
        if counts == 0 {
            return *self;
        }
        let q = std::f64::consts::TAU / counts as f64;
        let f = |a: f64| (a / q).round() * q;
        EncoderState { theta_g: f(self.theta_g), theta_l: f(self.theta_l), theta_r: f(self.theta_r) }
    }
}

/// Belt and gap velocity commands, mm/s, in the sensor-frame convention of
/// the module docs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BeltCommand {
    pub v_left: f64,
    pub v_right: f64,
    pub v_gap: f64,
}

/// Kinematic readout of the last step at its deepest contact points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub contact: DeepestPair,
    /// Object-surface velocity along x at `p1` and `p2` under the step's
    /// average twist, mm/s.
    pub surface_vx_p1: f64,
    pub surface_vx_p2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub theta: f64,
    pub omega: f64,
    pub x: f64,
}

#[derive(Debug, Clone)]
pub struct WorldState {
    pub object: Arc<ObjectShape>,
    pub pose: Pose2,
    /// Step-average velocities of the last step.
    pub omega: f64,
    pub vx: f64,
    pub vy: f64,
    pub gap: f64,
    /// Belt travel in each sensor's frame, mm.
    pub belt_left: f64,
    pub belt_right: f64,
    pub encoders: EncoderState,
    pub time: f64,
    pub step_count: u64,
    pub diagnostics: Option<StepDiagnostics>,
    warm: PlanarVelocity,
}

impl WorldState {
    /// Object at the origin with zero orientation in a gap of `gap` mm.
    pub fn new(object: Arc<ObjectShape>, gap: f64, cfg: &WorldConfig) -> Result<Self> {
        if !(gap.is_finite() && gap > 0.0) {
            return crate::error::domain(format!("gap must be > 0, got {gap}"));
        }
        Ok(WorldState {
            object,
            pose: Pose2::default(),
            omega: 0.0,
            vx: 0.0,
            vy: 0.0,
            gap,
            belt_left: 0.0,
            belt_right: 0.0,
            encoders: EncoderState { theta_g: cfg.motor_from_gap(gap), theta_l: 0.0, theta_r: 0.0 },
            time: 0.0,
            step_count: 0,
            diagnostics: None,
            warm: PlanarVelocity { vx: 0.0, omega: 0.0 },
        })
    }

    /// Object at zero orientation, centred vertically, with the gap closed
    /// until each belt penetrates `penetration` mm.
    pub fn grasped(object: Arc<ObjectShape>, penetration: f64, cfg: &WorldConfig) -> Result<Self> {
        let (lo, hi) = object.vertical_extent(0.0);
        let gap = (hi - lo) - 2.0 * penetration;
        let mut s = WorldState::new(object, gap.max(cfg.min_gap), cfg)?;
        s.pose.y = -0.5 * (lo + hi);
        let env = s.envelope(cfg);
        s.pose.y = solver::equilibrium_height(&env, s.gap, s.pose.y);
        Ok(s)
    }

    pub(crate) fn envelope(&self, cfg: &WorldConfig) -> Envelope {
        Envelope::compute(&self.object, self.pose.x, self.pose.theta, cfg.map_width, cfg.pixel_pitch)
    }

    pub fn ground_truth(&self) -> GroundTruth {
        ground_truth(self)
    }

    fn dump(&self) -> String {
        format!(
            "object={} t={} pose=({}, {}, {}) omega={} gap={} belts=({}, {})",
            self.object.id(),
            self.time,
            self.pose.x,
            self.pose.y,
            self.pose.theta,
            self.omega,
            self.gap,
            self.belt_left,
            self.belt_right
        )
    }
}

/// Exact pose and velocity readout.
pub fn ground_truth(state: &WorldState) -> GroundTruth {
    GroundTruth { theta: state.pose.theta, omega: state.omega, x: state.pose.x }
}

/// Advances the state by `cfg.dt` using `cfg.substeps` quasi-static
/// sub-iterations.
pub fn step(state: &WorldState, cmd: BeltCommand, cfg: &WorldConfig) -> Result<WorldState> {
    let mut s = state.clone();
    step_in_place(&mut s, cmd, cfg)?;
    Ok(s)
}

/// In-place form of [`step`].
pub fn step_in_place(s: &mut WorldState, cmd: BeltCommand, cfg: &WorldConfig) -> Result<()> {
    if ![cmd.v_left, cmd.v_right, cmd.v_gap].iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical { msg: format!("non-finite command {cmd:?}"), dump: s.dump() });
    }
    let h = cfg.dt / cfg.substeps as f64;
    let start = s.pose;
    let params = cfg.friction();
    let dx = cfg.pixel_pitch;
    let (width, pitch) = (cfg.map_width, cfg.pixel_pitch);
    for _ in 0..cfg.substeps {
        s.gap = (s.gap + cmd.v_gap * h).max(cfg.min_gap);
        s.encoders.theta_g = cfg.motor_from_gap(s.gap);
        s.belt_left += cmd.v_left * h;
        s.belt_right += cmd.v_right * h;
        s.encoders.theta_l += cmd.v_left * h / cfg.belt_transmission;
        s.encoders.theta_r += cmd.v_right * h / cfg.belt_transmission;

        let env = s.envelope(cfg);
        let y = solver::equilibrium_height(&env, s.gap, s.pose.y);
        let vy = (y - s.pose.y) / h;
        s.pose.y = y;
        let samples = solver::loaded_samples(
            &env,
            y,
            s.gap,
            |j| column_x(j, width, pitch),
            dx,
            &params,
            |side| match side {
                Side::Left => cmd.v_left,
                Side::Right => -cmd.v_right,
            },
        );
        let v = solver::solve_velocity(&samples, vy, params, s.warm);
        if !(v.vx.is_finite() && v.omega.is_finite() && y.is_finite()) {
            return Err(Error::Numerical { msg: format!("non-finite velocity {v:?}"), dump: s.dump() });
        }
        s.warm = v;
        s.pose.x += v.vx * h;
        s.pose.theta += v.omega * h;
    }
    s.time = (s.step_count + 1) as f64 * cfg.dt;
    s.step_count += 1;
    s.vx = (s.pose.x - start.x) / cfg.dt;
    s.vy = (s.pose.y - start.y) / cfg.dt;
    s.omega = (s.pose.theta - start.theta) / cfg.dt;

    s.diagnostics = contact(s, cfg).and_then(|c| c.deepest).map(|pair| {
        let surface_vx = |p: Vec2| s.vx - s.omega * (p.y - s.pose.y);
        StepDiagnostics { contact: pair, surface_vx_p1: surface_vx(pair.p1), surface_vx_p2: surface_vx(pair.p2) }
    });

    if !(s.pose.x.is_finite() && s.pose.y.is_finite() && s.pose.theta.is_finite()) {
        return Err(Error::Numerical { msg: "non-finite pose".into(), dump: s.dump() });
    }
    if s.pose.y.abs() > s.gap {
        return Err(Error::ObjectLost(format!("centroid left the gap: {}", s.dump())));
    }
    if s.pose.x.abs() > cfg.half_width() {
        return Err(Error::ObjectLost(format!("centroid left the sensor: {}", s.dump())));
    }
    Ok(())
}

