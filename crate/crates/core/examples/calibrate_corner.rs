//! Finds the plane protrusion that puts the minimum graspable radius of the
//! default fingertip at the 2.81 mm reference value.
//!
//! Run with `cargo run -p dtactive-core --example calibrate_corner`.

use dtactive::dexterity::{min_radius_flat_corner, CornerGeometry};

const TARGET: f64 = 2.81;

fn main() {
    let mut geom = CornerGeometry::default();
    let radius_at = |g: &mut CornerGeometry, h: f64| {
        g.plane_protrusion = h;
        min_radius_flat_corner(g).expect("valid geometry")
    };
    // Radius decreases with protrusion, so bisect on h.
    let (mut lo, mut hi) = (0.0, geom.corner_radius);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if radius_at(&mut geom, mid) > TARGET {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h = 0.5 * (lo + hi);
    let at_h = radius_at(&mut geom, h);
    let regular = radius_at(&mut geom, 0.0);
    println!(
        "R = {} mm, L = {} mm, c = {} mm -> plane_protrusion = {:.6} mm (r_min = {:.6} mm; h = 0 gives {:.6} mm)",
        geom.corner_radius,
        geom.plane_half_length,
        geom.table_clearance,
        h,
        at_h,
        regular,
    );
}
