use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use dtactive::world::*;
use dtactive::Error;
use proptest::prelude::*;

fn quiet() -> WorldConfig {
    WorldConfig { noise_sigma: 0.0, ..Default::default() }
}

fn grasp(id: &str, pen: f64, cfg: &WorldConfig) -> WorldState {
    WorldState::grasped(Arc::new(library_object(id).unwrap()), pen, cfg).unwrap()
}

fn roll(v: f64) -> BeltCommand {
    BeltCommand { v_left: v, v_right: v, v_gap: 0.0 }
}

fn circle_in_gap(radius: f64, gap: f64, cfg: &WorldConfig) -> WorldState {
    let shape = Arc::new(ObjectShape::circle("c", radius).unwrap());
    WorldState::new(shape, gap, cfg).unwrap()
}

#[test]
fn library_has_twelve_labelled_shapes() {
    let lib = build_object_library();
    let ids: Vec<&str> = lib.iter().map(|s| s.id()).collect();
    assert_eq!(ids, ["A1", "A2", "A3", "B1", "B2", "B3", "C1", "C2", "C3", "N1", "N2", "N3"]);
    assert!(matches!(lib[0].outline(), Outline::Circle { .. }));
    assert_eq!(lib, build_object_library());
}

#[test]
fn circle_contact_depth_and_diameter() {
    let cfg = quiet();
    let s = circle_in_gap(15.0, 28.0, &cfg);
    let c = contact(&s, &cfg).unwrap();
    let pair = c.deepest.unwrap();
    assert!((c.max_depth(Side::Left) - 1.0).abs() < 1e-6);
    assert!((c.max_depth(Side::Right) - 1.0).abs() < 1e-6);
    assert!((pair.d_obj - 30.0).abs() < 1e-6);
    assert_eq!(pair.tilt, 0.0);
    assert_eq!(pair.d_obj, (pair.p1 - pair.p2).norm());
}

#[test]
fn no_overlap_is_no_contact() {
    let cfg = quiet();
    let s = circle_in_gap(10.0, 25.0, &cfg);
    assert!(contact(&s, &cfg).is_none());
    assert!(render_depth(&s, Side::Left, &cfg).is_zero());
    assert!(render_depth(&s, Side::Right, &cfg).is_zero());
}

#[test]
fn deepest_pair_satisfies_projection_identity_on_library() {
    let cfg = quiet();
    for shape in build_object_library() {
        let id = shape.id().to_string();
        let mut s = grasp(&id, 0.4, &cfg);
        s.pose.theta = 0.7;
        s.pose.x = 1.3;
        if let Some(pair) = contact(&s, &cfg).and_then(|c| c.deepest) {
            let d = (pair.p1 - pair.p2).norm() * pair.tilt.cos();
            assert!((d - pair.d_obj).abs() < 1e-9, "{id}");
        }
    }
}

#[test]
fn zero_commands_leave_pose_unchanged() {
    let cfg = quiet();
    for id in ["A1", "B1", "C2", "N3"] {
        let s0 = grasp(id, 0.3, &cfg);
        let mut s = s0.clone();
        for _ in 0..20 {
            step_in_place(&mut s, BeltCommand::default(), &cfg).unwrap();
            assert_eq!(s.omega, 0.0, "{id}");
        }
        assert_eq!(s.pose, s0.pose, "{id}");
        assert!((s.time - 1.0).abs() < 1e-12);
    }
}

fn rolling_ratio(id: &str, cfg: &WorldConfig, steps: usize) -> (f64, f64) {
    let mut s = grasp(id, 0.3, cfg);
    let mut ratio = 0.0;
    let mut max_vy: f64 = 0.0;
    for _ in 0..steps {
        let d = contact(&s, cfg).unwrap().deepest.unwrap().d_obj;
        step_in_place(&mut s, roll(10.0), cfg).unwrap();
        ratio += s.omega / (20.0 / d);
        max_vy = max_vy.max(s.vy.abs());
    }
    (ratio / steps as f64, max_vy)
}

#[test]
fn circle_rolls_nearly_without_slip() {
    let cfg = quiet();
    let (k, vy) = rolling_ratio("A1", &cfg, 40);
    assert!((0.95..=1.0).contains(&k), "k = {k}");
    assert_eq!(vy, 0.0);
    // Independent oracle: ten times finer sub-stepping agrees.
    let fine = WorldConfig { substeps: 100, ..quiet() };
    let (k_fine, _) = rolling_ratio("A1", &fine, 40);
    assert!((k - k_fine).abs() < 1e-3, "{k} vs {k_fine}");
}

/// Mean ratio while rolling the first `degrees` from the initial pose, with
/// the gap regulated on the depth sum so the contact stays shallow.
fn regulated_rolling_ratio(id: &str, cfg: &WorldConfig, degrees: f64) -> f64 {
    use dtactive::control::{grip_pd, ControlState, Gains};
    use dtactive::world::{render_depth, Side};
    let gains = Gains { grip_kp: 0.01, grip_kd: 0.0, s_ref: 800.0, v_gap_max: 20.0, ..Default::default() };
    let mut st = ControlState::default();
    let mut s = grasp(id, 0.2, cfg);
    let (mut sum, mut n) = (0.0, 0);
    while s.pose.theta.to_degrees() < degrees {
        let depth = render_depth(&s, Side::Left, cfg).sum() + render_depth(&s, Side::Right, cfg).sum();
        let v_gap = grip_pd(depth, &gains, &mut st);
        let d = contact(&s, cfg).unwrap().deepest.unwrap().d_obj;
        step_in_place(&mut s, BeltCommand { v_left: 5.0, v_right: 5.0, v_gap }, cfg).unwrap();
        sum += s.omega / (10.0 / d);
        n += 1;
        assert!(n < 2000, "{id} did not turn {degrees} degrees");
    }
    sum / n as f64
}

#[test]
fn square_rolls_worse_than_circle() {
    let cfg = quiet();
    let k_circle = regulated_rolling_ratio("A2", &cfg, 20.0);
    let k_square = regulated_rolling_ratio("B1", &cfg, 20.0);
    assert!(k_square < k_circle, "{k_square} vs {k_circle}");
}

#[test]
fn depth_map_matches_segment_area() {
    let cfg = quiet();
    let s = circle_in_gap(15.0, 28.0, &cfg);
    let map = render_depth(&s, Side::Left, &cfg);
    let rows = render::support_rows(&cfg).len() as f64;
    // Circular segment of height h = 1 on radius 15.
    let (r, h): (f64, f64) = (15.0, 1.0);
    let segment = r * r * ((r - h) / r).acos() - (r - h) * (2.0 * r * h - h * h).sqrt();
    let integral = map.sum() * cfg.pixel_pitch * cfg.pixel_pitch / (rows * cfg.pixel_pitch);
    assert!((integral - segment).abs() / segment < 0.01, "{integral} vs {segment}");
    assert!(map.values.iter().all(|&v| (0.0..=cfg.d_max).contains(&v)));
}

#[test]
fn noisy_maps_are_deterministic_and_bounded() {
    let cfg = WorldConfig { noise_sigma: 0.2, ..Default::default() };
    let s = grasp("B2", 0.8, &cfg);
    let a = render_depth(&s, Side::Right, &cfg);
    let b = render_depth(&s, Side::Right, &cfg);
    assert_eq!(a, b);
    assert!(a.values.iter().all(|&v| (0.0..=cfg.d_max).contains(&v)));
    let quiet_map = render_depth(&s, Side::Right, &quiet());
    for (n, q) in a.values.iter().zip(&quiet_map.values) {
        if *q == 0.0 {
            assert_eq!(*n, 0.0);
        }
    }
    assert_ne!(a, render_depth(&s, Side::Left, &cfg));
}

#[test]
fn ground_truth_readout_and_integration() {
    let cfg = quiet();
    let mut s = grasp("C1", 0.3, &cfg);
    assert_eq!(s.ground_truth().theta, 0.0);
    let mut sum = 0.0;
    for i in 0..60 {
        step_in_place(&mut s, roll(4.0 + (i % 7) as f64), &cfg).unwrap();
        assert_eq!(s.ground_truth().omega, s.omega);
        sum += s.omega * cfg.dt;
    }
    assert!((s.ground_truth().theta - sum).abs() < 1e-9);
}

#[test]
fn stepping_is_deterministic() {
    let cfg = quiet();
    let run = || {
        let mut s = grasp("N1", 0.4, &cfg);
        let mut out = Vec::new();
        for i in 0..40 {
            let v = 6.0 * (i as f64 * 0.3).sin();
            step_in_place(&mut s, BeltCommand { v_left: v, v_right: 5.0, v_gap: -0.1 }, &cfg).unwrap();
            out.push((s.pose.x.to_bits(), s.pose.y.to_bits(), s.pose.theta.to_bits()));
        }
        out
    };
    assert_eq!(run(), run());
}

#[test]
fn kinematic_identity_at_deepest_points() {
    let cfg = quiet();
    let mut s = grasp("B3", 0.3, &cfg);
    for i in 0..30 {
        step_in_place(&mut s, BeltCommand { v_left: 8.0, v_right: 2.0 + i as f64 * 0.2, v_gap: 0.0 }, &cfg).unwrap();
        let d = s.diagnostics.unwrap();
        let rhs = (d.surface_vx_p1 - d.surface_vx_p2) / d.contact.d_obj;
        assert!((s.omega - rhs).abs() < 1e-6);
    }
}

#[test]
fn opening_the_gap_loses_the_object_contact() {
    let cfg = quiet();
    let mut s = grasp("A1", 0.2, &cfg);
    for _ in 0..10 {
        step_in_place(&mut s, BeltCommand { v_left: 0.0, v_right: 0.0, v_gap: 5.0 }, &cfg).unwrap();
    }
    assert!(contact(&s, &cfg).is_none());
}

#[test]
fn sliding_off_the_sensor_is_object_lost() {
    let cfg = quiet();
    let mut s = grasp("A1", 0.3, &cfg);
    // Opposite world velocities translate the object along x.
    let err = (0..200)
        .try_for_each(|_| step_in_place(&mut s, BeltCommand { v_left: 20.0, v_right: -20.0, v_gap: 0.0 }, &cfg))
        .unwrap_err();
    assert!(matches!(err, Error::ObjectLost(_)), "{err}");
}

#[test]
fn non_finite_command_is_numerical_error() {
    let cfg = quiet();
    let s = grasp("A1", 0.3, &cfg);
    let err = step(&s, roll(f64::NAN), &cfg).unwrap_err();
    assert!(matches!(err, Error::Numerical { .. }));
}

#[test]
fn config_validation_names_keys() {
    let cfg = WorldConfig { dt: -1.0, ..Default::default() };
    assert_eq!(cfg.validate().unwrap_err().to_string(), "invalid config value dt: must be > 0");
    let cfg = WorldConfig { substeps: 0, ..Default::default() };
    assert!(cfg.validate_with_prefix("world.").unwrap_err().to_string().contains("world.substeps:"));
    WorldConfig::default().validate().unwrap();
}

#[test]
fn pgm_dump_layout() {
    let cfg = quiet();
    let s = circle_in_gap(15.0, 28.0, &cfg);
    let map = render_depth(&s, Side::Left, &cfg);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.pgm");
    write_pgm(&map, &path, &["config abc seed 7".into()]).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let header = format!("P5\n# config abc seed 7\n{} {}\n65535\n", cfg.map_width, cfg.map_height);
    assert!(bytes.starts_with(header.as_bytes()));
    assert_eq!(bytes.len(), header.len() + 2 * cfg.map_width * cfg.map_height);
    let body = &bytes[header.len()..];
    let max = body.chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]])).max().unwrap();
    assert_eq!(max, (map.max() * 1000.0).round() as u16);
}

/// Mirroring the outline negates the rotation sense; in the sensor-frame
/// speed convention the mirrored command negates both belt speeds.
#[test]
fn mirror_symmetry() {
    let cfg = quiet();
    for id in ["B1", "C2", "N1", "N3"] {
        let shape = library_object(id).unwrap();
        let mut a = WorldState::grasped(Arc::new(shape.clone()), 0.3, &cfg).unwrap();
        let mut b = WorldState::grasped(Arc::new(shape.mirrored()), 0.3, &cfg).unwrap();
        for i in 0..20 {
            let (vl, vr) = (6.0 + i as f64 * 0.1, 3.0);
            step_in_place(&mut a, BeltCommand { v_left: vl, v_right: vr, v_gap: 0.0 }, &cfg).unwrap();
            step_in_place(&mut b, BeltCommand { v_left: -vl, v_right: -vr, v_gap: 0.0 }, &cfg).unwrap();
            assert!((a.omega + b.omega).abs() < 1e-6, "{id} step {i}");
            assert!((a.pose.x + b.pose.x).abs() < 1e-6, "{id} step {i}");
            assert!((a.pose.theta + b.pose.theta).abs() < 1e-6, "{id} step {i}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zero_commands_never_gain_angular_speed(idx in 0usize..12, theta in -PI..PI, pen in 0.1f64..0.8) {
        let cfg = quiet();
        let shape = build_object_library().swap_remove(idx);
        let mut s = WorldState::grasped(Arc::new(shape), pen, &cfg).unwrap();
        s.pose.theta = theta;
        let mut prev = f64::INFINITY;
        for _ in 0..10 {
            if step_in_place(&mut s, BeltCommand::default(), &cfg).is_err() { break; }
            prop_assert!(s.omega.abs() <= prev + 1e-9);
            prev = s.omega.abs();
        }
    }

    #[test]
    fn kinematic_identity_random_steps(idx in 0usize..12, vl in -15.0f64..15.0, vr in -15.0f64..15.0, theta in 0.0..TAU) {
        let cfg = quiet();
        let shape = build_object_library().swap_remove(idx);
        let mut s = WorldState::grasped(Arc::new(shape), 0.3, &cfg).unwrap();
        s.pose.theta = theta;
        if step_in_place(&mut s, BeltCommand { v_left: vl, v_right: vr, v_gap: 0.0 }, &cfg).is_ok() {
            if let Some(d) = s.diagnostics {
                let rhs = (d.surface_vx_p1 - d.surface_vx_p2) / d.contact.d_obj;
                prop_assert!((s.omega - rhs).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn depth_maps_stay_in_range(idx in 0usize..12, theta in 0.0..TAU, pen in 0.0f64..2.5, sigma in 0.0f64..0.3) {
        let cfg = WorldConfig { noise_sigma: sigma, ..Default::default() };
        let shape = build_object_library().swap_remove(idx);
        let mut s = WorldState::grasped(Arc::new(shape), pen, &cfg).unwrap();
        s.pose.theta = theta;
        for side in [Side::Left, Side::Right] {
            let m = render_depth(&s, side, &cfg);
            prop_assert!(m.values.iter().all(|&v| (0.0..=cfg.d_max).contains(&v)));
        }
    }
}
