//! Planar polygon helpers shared by the grasp analysis and the simulator.
//!
//! Polygons are vertex lists in millimetres, counter-clockwise, with the
//! closing edge implied.

use nalgebra::Vector2;

pub type Vec2 = Vector2<f64>;

#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

#[inline]
pub fn rotate(v: &Vec2, cos: f64, sin: f64) -> Vec2 {
    Vec2::new(cos * v.x - sin * v.y, sin * v.x + cos * v.y)
}

/// Iterator over the closed edge list `(v[i], v[i+1 mod n])`.
pub fn edges(poly: &[Vec2]) -> impl Iterator<Item = (&Vec2, &Vec2)> {
    poly.iter().zip(poly.iter().cycle().skip(1))
}

/// Signed area (positive for counter-clockwise winding).
pub fn signed_area(poly: &[Vec2]) -> f64 {
    0.5 * edges(poly).map(|(a, b)| cross(a, b)).sum::<f64>()
}

pub fn centroid(poly: &[Vec2]) -> Vec2 {
    let mut acc = Vec2::zeros();
    let mut twice_area = 0.0;
    for (a, b) in edges(poly) {
        let c = cross(a, b);
        acc += (a + b) * c;
        twice_area += c;
    }
    acc / (3.0 * twice_area)
}

/// Polar second moment of area about `origin`: the integral of |p - origin|^2
/// over the region. Exact for polygons (sum over the fan of triangles
/// `origin, a, b`).
pub fn polar_moment(poly: &[Vec2], origin: &Vec2) -> f64 {
    edges(poly)
        .map(|(a, b)| {
            let a = a - origin;
            let b = b - origin;
            cross(&a, &b) * (a.dot(&a) + a.dot(&b) + b.dot(&b)) / 12.0
        })
        .sum()
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Distance from `p` to the polygon boundary.
pub fn boundary_distance(poly: &[Vec2], p: &Vec2) -> f64 {
    edges(poly)
        .map(|(a, b)| segment_distance(p, a, b))
        .fold(f64::INFINITY, f64::min)
}

/// Crossing-number point-in-polygon test (boundary points may go either way).
pub fn contains(poly: &[Vec2], p: &Vec2) -> bool {
    let mut inside = false;
    for (a, b) in edges(poly) {
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn segments_cross(a: &Vec2, b: &Vec2, c: &Vec2, d: &Vec2) -> bool {
    let d1 = cross(&(b - a), &(c - a));
    let d2 = cross(&(b - a), &(d - a));
    let d3 = cross(&(d - c), &(a - c));
    let d4 = cross(&(d - c), &(b - c));
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// True when no two non-adjacent edges properly intersect. Quadratic, which is
/// fine for the few-hundred-vertex outlines used here.
pub fn is_simple(poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (&poly[i], &poly[(i + 1) % n]);
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (&poly[j], &poly[(j + 1) % n]);
            if segments_cross(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Regular `n`-gon with circumradius `radius`, first vertex at `phase` rad.
pub fn regular_polygon(n: usize, radius: f64, phase: f64) -> Vec<Vec2> {
    (0..n)
        .map(|k| {
            let a = phase + std::f64::consts::TAU * k as f64 / n as f64;
            Vec2::new(radius * a.cos(), radius * a.sin())
        })
        .collect()
}
