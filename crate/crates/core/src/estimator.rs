//! Tactile statistics and dead-reckoning orientation estimation with optional
//! learned rectification.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::learning::{self, ModelParams};
use crate::world::{column_x, DepthMap, EncoderState};

/// Consecutive invalid tactile frames tolerated before the object is lost.
pub const MAX_INVALID_FRAMES: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TactileSummary {
    /// Sum of both maps, mm px.
    pub depth_sum: f64,
    /// Mean of the two maps' depth-weighted column centroids, mm.
    pub centroid_x: f64,
    /// `gap + max(D_L) + max(D_R)`, mm.
    pub d_obj: f64,
    /// False when either map is all zero; `centroid_x` and `d_obj` are then
    /// meaningless.
    pub valid: bool,
}

fn column_centroid(map: &DepthMap) -> Option<f64> {
    let (mut w, mut wx) = (0.0, 0.0);
    for j in 0..map.width {
        let col: f64 = (0..map.height).map(|i| map.get(i, j)).sum();
        if col > 0.0 {
            w += col;
            wx += col * column_x(j, map.width, map.pitch);
        }
    }
    (w > 0.0).then(|| wx / w)
}

pub fn summarize(left: &DepthMap, right: &DepthMap, gap: f64) -> Result<TactileSummary> {
    if (left.width, left.height) != (right.width, right.height) {
        return Err(Error::Dimension(format!(
            "left map {}x{} vs right map {}x{}",
            left.width, left.height, right.width, right.height
        )));
    }
    let depth_sum = left.sum() + right.sum();
    match (column_centroid(left), column_centroid(right)) {
        (Some(cl), Some(cr)) => Ok(TactileSummary {
            depth_sum,
            centroid_x: 0.5 * (cl + cr),
            d_obj: gap + left.max() + right.max(),
            valid: true,
        }),
        _ => Ok(TactileSummary { depth_sum, centroid_x: f64::NAN, d_obj: f64::NAN, valid: false }),
    }
}

/// Commanded object rate `(v_L + v_R) / d_obj`.
pub fn command_omega(v_left: f64, v_right: f64, d_obj: f64) -> Result<f64> {
    if !(d_obj > 0.0) {
        return domain(format!("d_obj must be > 0, got {d_obj}"));
    }
    Ok((v_left + v_right) / d_obj)
}

/// Holds the last valid centroid and `d_obj` across short tactile dropouts.
#[derive(Debug, Clone, Default)]
pub struct ContactHold {
    last: Option<(f64, f64)>,
    invalid_run: u32,
}

impl ContactHold {
    /// Returns `(centroid_x, d_obj)` to use this frame.
    pub fn update(&mut self, s: &TactileSummary) -> Result<(f64, f64)> {
        if s.valid {
            self.invalid_run = 0;
            self.last = Some((s.centroid_x, s.d_obj));
        } else {
            self.invalid_run += 1;
        }
        match self.last {
            Some(v) if self.invalid_run <= MAX_INVALID_FRAMES => Ok(v),
            Some(_) => Err(Error::ObjectLost(format!("no two-sided contact for {} frames", self.invalid_run))),
            None => Err(Error::ObjectLost("no two-sided contact observed yet".into())),
        }
    }

    pub fn invalid_run(&self) -> u32 {
        self.invalid_run
    }
}

/// Belt surface speeds from motor encoder backward differences.
#[derive(Debug, Clone)]
pub struct BeltOdometry {
    transmission: f64,
    /// EMA weight of the newest sample; `None` disables filtering.
    ema: Option<f64>,
    prev: Option<EncoderState>,
    filtered: Option<(f64, f64)>,
}

/// Raw and filtered belt speeds of one frame, mm/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BeltSpeeds {
    pub v_left: f64,
    pub v_right: f64,
    pub v_left_filtered: f64,
    pub v_right_filtered: f64,
}

impl BeltOdometry {
    pub fn new(transmission: f64, ema: Option<f64>) -> Self {
        BeltOdometry { transmission, ema, prev: None, filtered: None }
    }

    /// Speeds over the last period; zero on the first call.
    pub fn update(&mut self, enc: EncoderState, dt: f64) -> BeltSpeeds {
        let (vl, vr) = match self.prev {
            Some(p) => (
                self.transmission * (enc.theta_l - p.theta_l) / dt,
                self.transmission * (enc.theta_r - p.theta_r) / dt,
            ),
            None => (0.0, 0.0),
        };
        self.prev = Some(enc);
        let (fl, fr) = match (self.ema, self.filtered) {
            (Some(a), Some((fl, fr))) => (fl + a * (vl - fl), fr + a * (vr - fr)),
            _ => (vl, vr),
        };
        self.filtered = Some((fl, fr));
        BeltSpeeds { v_left: vl, v_right: vr, v_left_filtered: fl, v_right_filtered: fr }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OrientationEstimate {
    /// Unwrapped estimated orientation, rad.
    pub theta: f64,
    pub k_hat: f64,
}

impl OrientationEstimate {
    pub fn new() -> Self {
        OrientationEstimate { theta: 0.0, k_hat: 1.0 }
    }
}

/// Rate ratio source for dead reckoning.
pub trait RatioPredictor {
    /// Ratio from pooled features and the scalar input.
    fn predict(&self, pooled: &[f64], omega: f64) -> Result<f64>;
}

/// A trained network with the scalar normalization it was trained with.
#[derive(Debug, Clone, Copy)]
pub struct NetworkPredictor<'a> {
    pub model: &'a ModelParams,
    pub omega_max: f64,
}

impl RatioPredictor for NetworkPredictor<'_> {
    fn predict(&self, pooled: &[f64], omega: f64) -> Result<f64> {
        self.model.forward(&learning::canonical_input(pooled, omega, self.omega_max))
    }
}

/// Integrates `theta += k * omega_c * dt` with `k` from `model`, or 1 when
/// there is none. `pooled` are the frame's pooled depth features.
pub fn update_from_pooled(
    est: OrientationEstimate,
    pooled: &[f64],
    omega_c: f64,
    dt: f64,
    model: Option<&dyn RatioPredictor>,
) -> Result<OrientationEstimate> {
    if !(dt > 0.0) {
        return domain(format!("dt must be > 0, got {dt}"));
    }
    let k_hat = match model {
        Some(m) => m.predict(pooled, omega_c).map_err(|e| match e {
            Error::Model(msg) => Error::Estimator(msg),
            other => other,
        })?,
        None => 1.0,
    };
    if !k_hat.is_finite() {
        return Err(Error::Estimator(format!("non-finite rate ratio {k_hat}")));
    }
    Ok(OrientationEstimate { theta: est.theta + k_hat * omega_c * dt, k_hat })
}

/// As [`update_from_pooled`], pooling the two maps with saturation `d_max`.
pub fn update(
    est: OrientationEstimate,
    left: &DepthMap,
    right: &DepthMap,
    d_max: f64,
    omega_c: f64,
    dt: f64,
    model: Option<&dyn RatioPredictor>,
) -> Result<OrientationEstimate> {
    let pooled = learning::pool_pair(left, right, d_max)?;
    update_from_pooled(est, &pooled, omega_c, dt, model)
}
