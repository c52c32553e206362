//! Grasp-capability calculations for the fingertip: smallest graspable
//! object, resistance to torsion about the grasp axis and available lifting
//! force.
//!
//! All lengths are millimetres, forces newtons, torques N·mm.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{self, Vec2};

const BISECTION_TOL: f64 = 1e-6;
const BISECTION_MAX_ITERS: usize = 200;
const SEARCH_LIMIT: f64 = 100.0;

/// Minimum object radius a roller fingertip of corner radius `corner_radius`
/// can pick up from a table.
pub fn min_radius_roller(corner_radius: f64) -> Result<f64> {
    if !(corner_radius > 0.0) || !corner_radius.is_finite() {
        return domain(format!("corner radius must be positive, got {corner_radius}"));
    }
    Ok(corner_radius / 4.0)
}

/// Cross-section of the lower end of one closed fingertip.
///
/// The right finger is described in a frame whose origin is the point on the
/// table directly below the closed contact line: the flat tactile plane lies
/// on `x = 0`, the table is `y = 0`. The fingertip corner is an arc of radius
/// `corner_radius` centred at `(R, c + R)`, `c` being the table clearance. The
/// tactile plane runs down past the arc's tangent point by `plane_protrusion`,
/// ending at `E = (0, c + R - h)`; the belt then runs straight from `E` onto
/// the arc. With `h = 0` the profile is a regular rounded corner.
/// `plane_half_length` sets the extent of the plane above `E` (length `2L`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CornerGeometry {
    pub corner_radius: f64,
    pub plane_protrusion: f64,
    pub plane_half_length: f64,
    pub table_clearance: f64,
}

impl Default for CornerGeometry {
    /// Fingertip dimensions calibrated so the minimum graspable radius is
    /// 2.81 mm; see the `calibrate_corner` example.
    fn default() -> Self {
        CornerGeometry {
            corner_radius: 12.0,
            plane_protrusion: DEFAULT_PROTRUSION,
            plane_half_length: 16.0,
            table_clearance: 0.5,
        }
    }
}

/// Protrusion found by bisection for R = 12, L = 16, c = 0.5 (target 2.81 mm).
pub const DEFAULT_PROTRUSION: f64 = 6.265_483;

impl CornerGeometry {
    pub fn validate(&self) -> Result<()> {
        let CornerGeometry {
            corner_radius: r,
            plane_protrusion: h,
            plane_half_length: l,
            table_clearance: c,
        } = *self;
        if !(r > 0.0 && r.is_finite()) {
            return domain(format!("corner_radius must be > 0, got {r}"));
        }
        if !(h >= 0.0 && h <= r) {
            return domain(format!("plane_protrusion must lie in [0, corner_radius], got {h}"));
        }
        if !(l > r && l.is_finite()) {
            return domain(format!("plane_half_length must exceed corner_radius, got {l}"));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return domain(format!("table_clearance must be >= 0, got {c}"));
        }
        Ok(())
    }

    /// Distance from `p` to the right fingertip's outline.
    fn outline_distance(&self, p: &Vec2) -> f64 {
        let r = self.corner_radius;
        let c = self.table_clearance;
        let h = self.plane_protrusion;
        let l = self.plane_half_length;
        let center = Vec2::new(r, c + r);
        let edge = Vec2::new(0.0, c + r - h);
        let top = Vec2::new(0.0, edge.y + 2.0 * l);
        let bottom = Vec2::new(r, c);
        let bottom_end = Vec2::new(r + 2.0 * l, c);

        // Lower tangent from E onto the arc.
        let d = edge - center;
        let beta = (r / d.norm()).clamp(-1.0, 1.0).acos();
        let tangent_angle = lower_left_angle(d.y.atan2(d.x)) + beta;
        let tangent = center + Vec2::new(tangent_angle.cos(), tangent_angle.sin()) * r;

        let arc = {
            let q = p - center;
            let a = lower_left_angle(q.y.atan2(q.x));
            let end_angle = -std::f64::consts::FRAC_PI_2;
            if a >= tangent_angle && a <= end_angle {
                (q.norm() - r).abs()
            } else {
                (p - tangent).norm().min((p - bottom).norm())
            }
        };
        [
            geometry::segment_distance(p, &edge, &top),
            geometry::segment_distance(p, &edge, &tangent),
            geometry::segment_distance(p, &bottom, &bottom_end),
            arc,
        ]
        .into_iter()
        .fold(arc, f64::min)
    }

    /// Whether a circle of radius `r` resting on the table midway between the
    /// closed fingers touches them. The configuration is mirror symmetric, so
    /// touching one finger means touching both.
    pub fn circle_touches(&self, r: f64) -> bool {
        self.outline_distance(&Vec2::new(0.0, r)) <= r
    }
}

// Maps atan2 output so the lower-left quadrant is contiguous: (pi/2, pi] -> (-3pi/2, -pi].
fn lower_left_angle(a: f64) -> f64 {
    if a > std::f64::consts::FRAC_PI_2 {
        a - std::f64::consts::TAU
    } else {
        a
    }
}

/// Minimum graspable radius for the flat-plane fingertip, by bisection on the
/// contact test (which is monotone in `r`).
pub fn min_radius_flat_corner(geom: &CornerGeometry) -> Result<f64> {
    geom.validate()?;
    if !geom.circle_touches(SEARCH_LIMIT) {
        return Err(Error::Ungraspable(format!(
            "no contact for any radius up to {SEARCH_LIMIT} mm"
        )));
    }
    if geom.circle_touches(0.0) {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, SEARCH_LIMIT);
    for _ in 0..BISECTION_MAX_ITERS {
        if hi - lo <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if geom.circle_touches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Contact patch between the object and one fingertip.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactRegion {
    boundary: Vec<Vec2>,
    rotation_center: Vec2,
}

impl ContactRegion {
    pub fn new(boundary: Vec<Vec2>, rotation_center: Vec2) -> Result<Self> {
        if boundary.len() < 3 {
            return domain("contact region needs at least three vertices");
        }
        if !(geometry::signed_area(&boundary) > 0.0) {
            return domain("contact region must have positive area (counter-clockwise)");
        }
        if !geometry::is_simple(&boundary) {
            return domain("contact region boundary self-intersects");
        }
        let on_boundary = geometry::boundary_distance(&boundary, &rotation_center) <= 1e-9;
        if !on_boundary && !geometry::contains(&boundary, &rotation_center) {
            return domain("rotation center lies outside the contact region");
        }
        Ok(ContactRegion { boundary, rotation_center })
    }

    /// Region rotating about its own centroid.
    pub fn about_centroid(boundary: Vec<Vec2>) -> Result<Self> {
        if boundary.len() < 3 || geometry::signed_area(&boundary) == 0.0 {
            return domain("contact region must have positive area");
        }
        let c = geometry::centroid(&boundary);
        Self::new(boundary, c)
    }

    pub fn boundary(&self) -> &[Vec2] {
        &self.boundary
    }

    pub fn rotation_center(&self) -> Vec2 {
        self.rotation_center
    }

    pub fn area(&self) -> f64 {
        geometry::signed_area(&self.boundary)
    }

    pub fn polar_moment(&self) -> f64 {
        geometry::polar_moment(&self.boundary, &self.rotation_center)
    }

    /// Largest distance from the rotation center to the boundary (attained at
    /// a vertex).
    pub fn max_radius(&self) -> f64 {
        self.boundary
            .iter()
            .map(|v| (v - self.rotation_center).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspLoad {
    pub normal_force: f64,
    pub friction_coefficient: f64,
}

/// Torque both fingertips resist before the outermost contact point slides:
/// `2 mu F I_p / (L_m A_0)`.
pub fn anti_torsion_torque(region: &ContactRegion, load: &GraspLoad) -> Result<f64> {
    let GraspLoad {
        normal_force: f,
        friction_coefficient: mu,
    } = *load;
    if !(f >= 0.0) || !(mu >= 0.0) {
        return domain(format!("load must be non-negative, got F = {f}, mu = {mu}"));
    }
    let area = region.area();
    let reach = region.max_radius();
    if !(area > 0.0) {
        return domain("contact region has zero area");
    }
    if !(reach > 0.0) {
        return domain("contact region has zero reach from the rotation center");
    }
    Ok(2.0 * mu * f * region.polar_moment() / (reach * area))
}

/// Net upward force from two fingertips of corner radius `corner_radius`
/// squeezing an object of radius `object_radius` with normal force
/// `normal_force`. Negative means friction cannot lift the object.
pub fn lifting_force(
    normal_force: f64,
    friction_coefficient: f64,
    corner_radius: f64,
    object_radius: f64,
) -> Result<f64> {
    if !(object_radius > 0.0) {
        return domain(format!("object radius must be positive, got {object_radius}"));
    }
    if !(corner_radius >= object_radius) {
        return domain(format!(
            "corner radius {corner_radius} must be at least the object radius {object_radius}"
        ));
    }
    if !(normal_force >= 0.0) || !(friction_coefficient >= 0.0) {
        return domain("normal force and friction coefficient must be non-negative");
    }
    let alpha = (corner_radius / object_radius - 1.0).atan();
    let friction = friction_coefficient * normal_force;
    Ok(2.0 * (friction * alpha.cos() - normal_force * alpha.sin()))
}

/// One line of the dexterity summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DexterityRow {
    pub name: String,
    pub value: f64,
    pub unit: &'static str,
}

/// Reference evaluations of every analysis: the roller and flat-plane minimum
/// radii, disk and square anti-torsion torques, and lifting forces.
pub fn summary_table(geom: &CornerGeometry) -> Result<Vec<DexterityRow>> {
    let row = |name: String, value: f64, unit| DexterityRow { name, value, unit };
    let disk = ContactRegion::about_centroid(geometry::regular_polygon(720, 10.0, 0.0))?;
    let square = ContactRegion::about_centroid(vec![
        Vec2::new(-10.0, -10.0),
        Vec2::new(10.0, -10.0),
        Vec2::new(10.0, 10.0),
        Vec2::new(-10.0, 10.0),
    ])?;
    let load = |mu| GraspLoad { normal_force: 10.0, friction_coefficient: mu };
    Ok(vec![
        row("min radius, roller fingertip R=20".into(), min_radius_roller(20.0)?, "mm"),
        row(
            format!("min radius, flat-plane fingertip R={}", geom.corner_radius),
            min_radius_flat_corner(geom)?,
            "mm",
        ),
        row("anti-torsion torque, disk a=10 mu=1 F=10".into(), anti_torsion_torque(&disk, &load(1.0))?, "N*mm"),
        row("anti-torsion torque, square s=20 mu=0.5 F=10".into(), anti_torsion_torque(&square, &load(0.5))?, "N*mm"),
        row("lifting force, R=r=5 mu=0.8 F=10".into(), lifting_force(10.0, 0.8, 5.0, 5.0)?, "N"),
        row("lifting force, R=10 r=5 mu=1 F=10".into(), lifting_force(10.0, 1.0, 10.0, 5.0)?, "N"),
        row("lifting force, R=10 r=5 mu=0.8 F=10".into(), lifting_force(10.0, 0.8, 10.0, 5.0)?, "N"),
    ])
}

/// The summary as a JSON record with provenance lines.
pub fn table_json(rows: &[DexterityRow], provenance: &[String]) -> String {
    let record = serde_json::json!({ "provenance": provenance, "rows": rows });
    serde_json::to_string_pretty(&record).expect("rows serialize") + "\n"
}
