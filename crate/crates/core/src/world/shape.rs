//! Object outlines and the twelve-object test library.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::{self, Vec2};

const SMOOTH_VERTICES: usize = 240;
const FILLET_SEGMENTS: usize = 8;
const POLYGON_FILLET: f64 = 1.0;

pub const MAX_RADIUS: f64 = 30.0;
pub const MIN_RADIUS: f64 = 3.0;

/// Cross-section outline in the body frame, centroid at the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum Outline {
    Circle { radius: f64 },
    /// Counter-clockwise vertices.
    Polygon { vertices: Vec<Vec2> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectShape {
    id: String,
    outline: Outline,
}

impl ObjectShape {
    pub fn circle(id: impl Into<String>, radius: f64) -> Result<Self> {
        let shape = ObjectShape { id: id.into(), outline: Outline::Circle { radius } };
        shape.validate()?;
        Ok(shape)
    }

    /// Builds a polygonal shape, re-centering the vertices on their centroid.
    pub fn polygon(id: impl Into<String>, vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.len() < 3 {
            return domain("polygon outline needs at least three vertices");
        }
        let c = geometry::centroid(&vertices);
        let vertices = vertices.into_iter().map(|v| v - c).collect();
        let shape = ObjectShape { id: id.into(), outline: Outline::Polygon { vertices } };
        shape.validate()?;
        Ok(shape)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn outline(&self) -> &Outline {
        &self.outline
    }

    /// Mirror image across the body y axis (x -> -x).
    pub fn mirrored(&self) -> ObjectShape {
        let outline = match &self.outline {
            Outline::Circle { radius } => Outline::Circle { radius: *radius },
            Outline::Polygon { vertices } => Outline::Polygon {
                // Reversing keeps the winding counter-clockwise.
                vertices: vertices.iter().rev().map(|v| Vec2::new(-v.x, v.y)).collect(),
            },
        };
        ObjectShape { id: format!("{}-mirror", self.id), outline }
    }

    /// Farthest boundary point from the centroid.
    pub fn max_radius(&self) -> f64 {
        match &self.outline {
            Outline::Circle { radius } => *radius,
            Outline::Polygon { vertices } => vertices.iter().map(|v| v.norm()).fold(0.0, f64::max),
        }
    }

    /// Closest boundary point to the centroid.
    pub fn min_radius(&self) -> f64 {
        match &self.outline {
            Outline::Circle { radius } => *radius,
            Outline::Polygon { vertices } => geometry::boundary_distance(vertices, &Vec2::zeros()),
        }
    }

    /// Vertical extent `(min_y, max_y)` of the outline rotated by `theta`.
    pub fn vertical_extent(&self, theta: f64) -> (f64, f64) {
        match &self.outline {
            Outline::Circle { radius } => (-radius, *radius),
            Outline::Polygon { vertices } => {
                let (s, c) = theta.sin_cos();
                vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    let y = s * v.x + c * v.y;
                    (lo.min(y), hi.max(y))
                })
            }
        }
    }

    pub fn area(&self) -> f64 {
        match &self.outline {
            Outline::Circle { radius } => PI * radius * radius,
            Outline::Polygon { vertices } => geometry::signed_area(vertices),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.outline {
            Outline::Circle { radius } => {
                if !radius.is_finite() {
                    return domain(format!("{}: radius must be finite", self.id));
                }
            }
            Outline::Polygon { vertices } => {
                if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
                    return domain(format!("{}: non-finite vertex", self.id));
                }
                if !(geometry::signed_area(vertices) > 0.0) {
                    return domain(format!("{}: outline must be counter-clockwise", self.id));
                }
                if !geometry::is_simple(vertices) {
                    return domain(format!("{}: outline self-intersects", self.id));
                }
                if !is_star_shaped(vertices) {
                    return domain(format!("{}: outline is not star-shaped about its centroid", self.id));
                }
            }
        }
        let (lo, hi) = (self.min_radius(), self.max_radius());
        if hi > MAX_RADIUS || lo < MIN_RADIUS {
            return domain(format!(
                "{}: radii must lie in [{MIN_RADIUS}, {MAX_RADIUS}] mm, got [{lo:.3}, {hi:.3}]",
                self.id
            ));
        }
        Ok(())
    }

    pub fn to_spec(&self) -> ShapeSpec {
        match &self.outline {
            Outline::Circle { radius } => ShapeSpec {
                id: self.id.clone(),
                radius: Some(*radius),
                vertices: None,
            },
            Outline::Polygon { vertices } => ShapeSpec {
                id: self.id.clone(),
                radius: None,
                vertices: Some(vertices.iter().map(|v| [v.x, v.y]).collect()),
            },
        }
    }
}

/// Serialized form of a shape: either a radius or a vertex list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<[f64; 2]>>,
}

impl ShapeSpec {
    pub fn build(&self) -> Result<ObjectShape> {
        match (&self.radius, &self.vertices) {
            (Some(r), None) => ObjectShape::circle(self.id.clone(), *r),
            (None, Some(v)) => {
                ObjectShape::polygon(self.id.clone(), v.iter().map(|p| Vec2::new(p[0], p[1])).collect())
            }
            _ => domain(format!("shape {}: give exactly one of radius or vertices", self.id)),
        }
    }
}

/// Polar angle strictly increases around the outline (no ray from the
/// centroid crosses it twice).
fn is_star_shaped(vertices: &[Vec2]) -> bool {
    let mut total = 0.0;
    for (a, b) in geometry::edges(vertices) {
        if geometry::cross(a, b) <= 0.0 {
            return false;
        }
        total += geometry::cross(a, b).atan2(a.dot(b));
    }
    (total - TAU).abs() < 1e-6
}

/// Regular polygon with circumradius `radius`, corners rounded by `fillet`.
/// `phase` is the polar angle of the first corner.
pub fn rounded_polygon(n: usize, radius: f64, fillet: f64, phase: f64) -> Vec<Vec2> {
    let half = PI / n as f64;
    let center_dist = radius - fillet / half.cos();
    let mut out = Vec::with_capacity(n * (FILLET_SEGMENTS + 1));
    for k in 0..n {
        let dir = phase + TAU * k as f64 / n as f64;
        let c = Vec2::new(center_dist * dir.cos(), center_dist * dir.sin());
        for s in 0..=FILLET_SEGMENTS {
            let a = dir - half + 2.0 * half * s as f64 / FILLET_SEGMENTS as f64;
            out.push(c + Vec2::new(fillet * a.cos(), fillet * a.sin()));
        }
    }
    out
}

fn polar_curve(f: impl Fn(f64) -> Vec2) -> Vec<Vec2> {
    (0..SMOOTH_VERTICES)
        .map(|k| f(TAU * k as f64 / SMOOTH_VERTICES as f64))
        .collect()
}

fn ellipse(a: f64, b: f64) -> Vec<Vec2> {
    polar_curve(|t| Vec2::new(a * t.cos(), b * t.sin()))
}

fn superellipse(a: f64, b: f64, exponent: f64) -> Vec<Vec2> {
    let e = 2.0 / exponent;
    polar_curve(|t| {
        let (s, c) = t.sin_cos();
        Vec2::new(a * c.signum() * c.abs().powf(e), b * s.signum() * s.abs().powf(e))
    })
}

fn stadium(length: f64, width: f64) -> Vec<Vec2> {
    let r = width / 2.0;
    let off = (length - width) / 2.0;
    let half = SMOOTH_VERTICES / 2;
    let mut out = Vec::with_capacity(SMOOTH_VERTICES + 2);
    for k in 0..=half {
        let a = -FRAC_PI_2 + PI * k as f64 / half as f64;
        out.push(Vec2::new(off + r * a.cos(), r * a.sin()));
    }
    for k in 0..=half {
        let a = FRAC_PI_2 + PI * k as f64 / half as f64;
        out.push(Vec2::new(-off + r * a.cos(), r * a.sin()));
    }
    out
}

fn blob() -> Vec<Vec2> {
    polar_curve(|t| {
        let r = 11.0 * (1.0 + 0.18 * t.cos() + 0.10 * (2.0 * t).sin() + 0.06 * (3.0 * t).cos());
        Vec2::new(r * t.cos(), r * t.sin())
    })
}

/// The twelve evaluation objects: circles (A), rounded regular polygons (B),
/// elongated shapes (C) and the held-out novel set (N). Polygons are oriented
/// so a flat face rests on the belts at zero orientation.
pub fn build_object_library() -> Vec<ObjectShape> {
    let poly = |id: &str, v: Vec<Vec2>| ObjectShape::polygon(id, v).expect("library shape is valid");
    let circle = |id: &str, r: f64| ObjectShape::circle(id, r).expect("library shape is valid");
    vec![
        circle("A1", 10.0),
        circle("A2", 12.5),
        circle("A3", 15.0),
        poly("B1", rounded_polygon(4, 12.5, POLYGON_FILLET, PI / 4.0)),
        poly("B2", rounded_polygon(6, 12.5, POLYGON_FILLET, 0.0)),
        poly("B3", rounded_polygon(8, 12.5, POLYGON_FILLET, PI / 8.0)),
        poly("C1", ellipse(15.0, 10.0)),
        poly("C2", rounded_polygon(3, 14.0, 3.0, -PI / 6.0)),
        poly("C3", stadium(30.0, 20.0)),
        poly("N1", rounded_polygon(5, 12.5, POLYGON_FILLET, -0.3 * PI)),
        poly("N2", superellipse(12.0, 10.0, 4.0)),
        poly("N3", blob()),
    ]
}

/// Library lookup by id.
pub fn library_object(id: &str) -> Option<ObjectShape> {
    build_object_library().into_iter().find(|s| s.id() == id)
}

pub const TRAINED_IDS: [&str; 9] = ["A1", "A2", "A3", "B1", "B2", "B3", "C1", "C2", "C3"];
pub const NOVEL_IDS: [&str; 3] = ["N1", "N2", "N3"];
