//! Penetration of the object outline past the two belt planes.
//!
//! The left belt plane is `y = -g/2` and the right one `y = +g/2`. Depth is
//! sampled on the sensor's pixel columns, `x_j = (j + 1/2 - W/2) * pitch`, in
//! the sensor (world) frame.

use crate::geometry::{rotate, Vec2};

use super::shape::{ObjectShape, Outline};
use super::{WorldConfig, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// Column x coordinate in mm.
#[inline]
pub fn column_x(j: usize, width: usize, pitch: f64) -> f64 {
    (j as f64 + 0.5 - width as f64 / 2.0) * pitch
}

/// One side of the outline's silhouette per column: the extreme boundary
/// point's y offset from the centroid and the outward normal there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EnvelopeSample {
    pub offset: f64,
    pub normal: Vec2,
}

/// Lower (left-facing) and upper (right-facing) silhouettes of the object at
/// a given `(x, theta)`; independent of the centroid height, so the height can
/// be re-solved without recomputing it.
#[derive(Debug, Clone)]
pub(crate) struct Envelope {
    pub lower: Vec<Option<EnvelopeSample>>,
    pub upper: Vec<Option<EnvelopeSample>>,
    pub center_x: f64,
}

impl Envelope {
    pub fn compute(shape: &ObjectShape, center_x: f64, theta: f64, width: usize, pitch: f64) -> Self {
        let mut lower: Vec<Option<EnvelopeSample>> = vec![None; width];
        let mut upper: Vec<Option<EnvelopeSample>> = vec![None; width];
        let col_of = |x: f64| x / pitch + width as f64 / 2.0 - 0.5;
        match shape.outline() {
            Outline::Circle { radius } => {
                let r = *radius;
                let first = col_of(center_x - r).ceil().max(0.0) as usize;
                let last = col_of(center_x + r).floor().min(width as f64 - 1.0);
                if last >= 0.0 {
                    for j in first..=(last as usize) {
                        let dx = column_x(j, width, pitch) - center_x;
                        let s2 = r * r - dx * dx;
                        if s2 <= 0.0 {
                            continue;
                        }
                        let s = s2.sqrt();
                        lower[j] = Some(EnvelopeSample { offset: -s, normal: Vec2::new(dx / r, -s / r) });
                        upper[j] = Some(EnvelopeSample { offset: s, normal: Vec2::new(dx / r, s / r) });
                    }
                }
            }
            Outline::Polygon { vertices } => {
                let (sin, cos) = theta.sin_cos();
                let world: Vec<Vec2> = vertices
                    .iter()
                    .map(|v| {
                        let p = rotate(v, cos, sin);
                        Vec2::new(p.x + center_x, p.y)
                    })
                    .collect();
                let n = world.len();
                for i in 0..n {
                    let a = world[i];
                    let b = world[(i + 1) % n];
                    let d = b - a;
                    if d.x == 0.0 {
                        continue;
                    }
                    let len = d.norm();
                    let normal = Vec2::new(d.y / len, -d.x / len);
                    let (x0, x1) = if a.x < b.x { (a.x, b.x) } else { (b.x, a.x) };
                    let first = col_of(x0).ceil().max(0.0);
                    let last = col_of(x1).floor().min(width as f64 - 1.0);
                    if last < first {
                        continue;
                    }
                    for j in (first as usize)..=(last as usize) {
                        let x = column_x(j, width, pitch);
                        let y = a.y + (x - a.x) / d.x * d.y;
                        match &mut lower[j] {
                            Some(s) if s.offset <= y => {}
                            slot => *slot = Some(EnvelopeSample { offset: y, normal }),
                        }
                        match &mut upper[j] {
                            Some(s) if s.offset >= y => {}
                            slot => *slot = Some(EnvelopeSample { offset: y, normal }),
                        }
                    }
                }
            }
        }
        Envelope { lower, upper, center_x }
    }

    /// Penetration depth past `side`'s plane for column `j` with the centroid
    /// at height `center_y` and gap `gap`.
    #[inline]
    pub fn depth(&self, side: Side, j: usize, center_y: f64, gap: f64) -> f64 {
        match side {
            Side::Left => self.lower[j].map_or(0.0, |s| (-0.5 * gap - (center_y + s.offset)).max(0.0)),
            Side::Right => self.upper[j].map_or(0.0, |s| (center_y + s.offset - 0.5 * gap).max(0.0)),
        }
    }

    pub fn sample(&self, side: Side, j: usize) -> Option<EnvelopeSample> {
        match side {
            Side::Left => self.lower[j],
            Side::Right => self.upper[j],
        }
    }

    pub fn width(&self) -> usize {
        self.lower.len()
    }
}

/// Deepest-penetration geometry of a two-sided grasp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeepestPair {
    /// Deepest point into the left belt.
    pub p1: Vec2,
    /// Deepest point into the right belt.
    pub p2: Vec2,
    /// Angle between the line `p1 p2` and the y axis.
    pub tilt: f64,
    /// y-separation of `p1` and `p2`; equals `|p1 - p2| cos(tilt)`.
    pub d_obj: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactSummary {
    /// `(x, depth)` samples with positive depth against the left belt.
    pub patch_left: Vec<(f64, f64)>,
    pub patch_right: Vec<(f64, f64)>,
    /// Present when both belts are touched.
    pub deepest: Option<DeepestPair>,
}

impl ContactSummary {
    pub fn max_depth(&self, side: Side) -> f64 {
        let patch = match side {
            Side::Left => &self.patch_left,
            Side::Right => &self.patch_right,
        };
        patch.iter().map(|&(_, d)| d).fold(0.0, f64::max)
    }
}

/// Argmax-depth column, ties to the smallest x.
pub(crate) fn deepest_column(env: &Envelope, side: Side, center_y: f64, gap: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for j in 0..env.width() {
        let d = env.depth(side, j, center_y, gap);
        if d > 0.0 && best.is_none_or(|(_, b)| d > b) {
            best = Some((j, d));
        }
    }
    best
}

/// Contact geometry of the current state; `None` when neither belt is touched.
pub fn contact(state: &WorldState, cfg: &WorldConfig) -> Option<ContactSummary> {
    let env = state.envelope(cfg);
    let (y, g) = (state.pose.y, state.gap);
    let patch = |side: Side| -> Vec<(f64, f64)> {
        (0..env.width())
            .filter_map(|j| {
                let d = env.depth(side, j, y, g);
                (d > 0.0).then(|| (column_x(j, cfg.map_width, cfg.pixel_pitch), d))
            })
            .collect()
    };
    let patch_left = patch(Side::Left);
    let patch_right = patch(Side::Right);
    if patch_left.is_empty() && patch_right.is_empty() {
        return None;
    }
    let deepest = match (
        deepest_column(&env, Side::Left, y, g),
        deepest_column(&env, Side::Right, y, g),
    ) {
        (Some((j1, d1)), Some((j2, d2))) => {
            let p1 = Vec2::new(column_x(j1, cfg.map_width, cfg.pixel_pitch), -0.5 * g - d1);
            let p2 = Vec2::new(column_x(j2, cfg.map_width, cfg.pixel_pitch), 0.5 * g + d2);
            let delta = p2 - p1;
            Some(DeepestPair { p1, p2, tilt: delta.x.atan2(delta.y), d_obj: g + d1 + d2 })
        }
        _ => None,
    };
    Some(ContactSummary { patch_left, patch_right, deepest })
}
