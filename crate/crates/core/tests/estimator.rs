use std::sync::Arc;

use dtactive::estimator::*;
use dtactive::learning::{self, ModelParams, Role, DEFAULT_DIMS};
use dtactive::world::*;
use dtactive::Error;
use proptest::prelude::*;

fn quiet() -> WorldConfig {
    WorldConfig { noise_sigma: 0.0, ..Default::default() }
}

fn blank(cfg: &WorldConfig) -> DepthMap {
    DepthMap::zeros(cfg.map_width, cfg.map_height, cfg.pixel_pitch)
}

#[test]
fn single_pixel_summary() {
    let cfg = quiet();
    let mut left = blank(&cfg);
    let right = blank(&cfg);
    let j = 20;
    left.values[3 * left.width + j] = 0.5;
    let s = summarize(&left, &right, 30.0).unwrap();
    assert_eq!(s.depth_sum, 0.5);
    assert!(!s.valid);
    let mut right = blank(&cfg);
    right.values[3 * right.width + j] = 0.5;
    let s = summarize(&left, &right, 30.0).unwrap();
    assert!(s.valid);
    assert_eq!(s.depth_sum, 1.0);
    let x = column_x(j, cfg.map_width, cfg.pixel_pitch);
    assert!((s.centroid_x - x).abs() < 1e-12);
    assert!((s.d_obj - 31.0).abs() < 1e-12);
}

#[test]
fn both_maps_zero_is_invalid() {
    let cfg = quiet();
    let s = summarize(&blank(&cfg), &blank(&cfg), 30.0).unwrap();
    assert!(!s.valid);
    assert_eq!(s.depth_sum, 0.0);
    assert!(s.d_obj.is_nan() && s.centroid_x.is_nan());
}

#[test]
fn mismatched_maps_are_rejected() {
    let a = DepthMap::zeros(10, 4, 0.4);
    let b = DepthMap::zeros(11, 4, 0.4);
    assert!(matches!(summarize(&a, &b, 30.0), Err(Error::Dimension(_))));
}

/// Circle of radius 15 in a 28 mm gap: 1 mm per side, diameter 30.
#[test]
fn circle_diameter_matches_world_contact() {
    let cfg = quiet();
    let state = WorldState::new(Arc::new(ObjectShape::circle("c", 15.0).unwrap()), 28.0, &cfg).unwrap();
    let l = render_depth(&state, Side::Left, &cfg);
    let r = render_depth(&state, Side::Right, &cfg);
    let s = summarize(&l, &r, state.gap).unwrap();
    assert!(s.valid);
    assert!((s.d_obj - 30.0).abs() < 1e-3, "{}", s.d_obj);
    let c = contact(&state, &cfg).unwrap();
    let world_d = state.gap + c.max_depth(Side::Left) + c.max_depth(Side::Right);
    assert!((s.d_obj - world_d).abs() < 1e-3);
    assert!(s.centroid_x.abs() < 1e-9);
}

#[test]
fn command_omega_examples() {
    assert_eq!(command_omega(10.0, 10.0, 40.0).unwrap(), 0.5);
    assert_eq!(command_omega(7.0, -7.0, 40.0).unwrap(), 0.0);
    assert!(matches!(command_omega(1.0, 1.0, 0.0), Err(Error::Domain(_))));
    assert!(command_omega(1.0, 1.0, -2.0).is_err());
}

#[test]
fn raw_update_integrates_the_command() {
    let cfg = quiet();
    let (l, r) = (blank(&cfg), blank(&cfg));
    let e = update(OrientationEstimate::new(), &l, &r, cfg.d_max, 0.5, 0.05, None).unwrap();
    assert!((e.theta - 0.025).abs() < 1e-15);
    assert_eq!(e.k_hat, 1.0);
    assert!(update(e, &l, &r, cfg.d_max, 0.5, 0.0, None).is_err());
}

#[test]
fn zero_command_leaves_estimate_unchanged() {
    let cfg = quiet();
    let (l, r) = (blank(&cfg), blank(&cfg));
    let model = ModelParams::init(Role::N, &DEFAULT_DIMS, 3).unwrap();
    let net = NetworkPredictor { model: &model, omega_max: 1.0 };
    let start = OrientationEstimate { theta: 1.25, k_hat: 1.0 };
    for m in [None, Some(&net as &dyn RatioPredictor)] {
        let e = update(start, &l, &r, cfg.d_max, 0.0, 0.05, m).unwrap();
        assert_eq!(e.theta, 1.25);
    }
}

struct Fixed(f64);

impl RatioPredictor for Fixed {
    fn predict(&self, _: &[f64], _: f64) -> dtactive::Result<f64> {
        Ok(self.0)
    }
}

#[test]
fn non_finite_ratio_is_an_estimator_error() {
    let pooled = vec![0.0; learning::POOLED_LEN];
    let r = update_from_pooled(OrientationEstimate::new(), &pooled, 0.3, 0.05, Some(&Fixed(f64::NAN)));
    assert!(matches!(r, Err(Error::Estimator(_))));
}

#[test]
fn model_ratio_scales_the_increment() {
    let pooled = vec![0.0; learning::POOLED_LEN];
    let e = update_from_pooled(OrientationEstimate::new(), &pooled, 0.4, 0.05, Some(&Fixed(0.9))).unwrap();
    assert!((e.theta - 0.9 * 0.4 * 0.05).abs() < 1e-15);
    assert_eq!(e.k_hat, 0.9);
}

#[test]
fn contact_hold_keeps_values_for_five_frames() {
    let mut hold = ContactHold::default();
    let valid = TactileSummary { depth_sum: 10.0, centroid_x: 0.7, d_obj: 31.0, valid: true };
    let invalid = TactileSummary { depth_sum: 0.0, centroid_x: f64::NAN, d_obj: f64::NAN, valid: false };
    assert!(matches!(hold.update(&invalid), Err(Error::ObjectLost(_))));
    assert_eq!(hold.update(&valid).unwrap(), (0.7, 31.0));
    for _ in 0..MAX_INVALID_FRAMES {
        assert_eq!(hold.update(&invalid).unwrap(), (0.7, 31.0));
    }
    assert!(matches!(hold.update(&invalid), Err(Error::ObjectLost(_))));
}

#[test]
fn odometry_backward_difference_and_filter() {
    let mut odo = BeltOdometry::new(2.0, None);
    let enc = |l: f64, r: f64| EncoderState { theta_g: 0.0, theta_l: l, theta_r: r };
    assert_eq!(odo.update(enc(0.0, 0.0), 0.05).v_left, 0.0);
    let s = odo.update(enc(0.1, -0.05), 0.05);
    assert!((s.v_left - 4.0).abs() < 1e-12 && (s.v_right + 2.0).abs() < 1e-12);
    assert_eq!(s.v_left_filtered, s.v_left);
    let mut odo = BeltOdometry::new(2.0, Some(0.5));
    odo.update(enc(0.0, 0.0), 0.05);
    odo.update(enc(0.1, 0.0), 0.05);
    let s = odo.update(enc(0.1, 0.0), 0.05);
    assert_eq!(s.v_left, 0.0);
    assert!((s.v_left_filtered - 1.0).abs() < 1e-12);
}

/// Mirroring the scene mirrors the maps column-wise.
#[test]
fn mirrored_scene_mirrors_the_maps() {
    let cfg = quiet();
    for id in ["B1", "N3"] {
        let shape = library_object(id).unwrap();
        let mut a = WorldState::grasped(Arc::new(shape.clone()), 0.3, &cfg).unwrap();
        let mut b = WorldState::grasped(Arc::new(shape.mirrored()), 0.3, &cfg).unwrap();
        a.pose.theta = 0.4;
        b.pose.theta = -0.4;
        for side in [Side::Left, Side::Right] {
            let ma = render_depth(&a, side, &cfg);
            let mb = render_depth(&b, side, &cfg);
            for i in 0..ma.height {
                for j in 0..ma.width {
                    let d = (ma.get(i, j) - mb.get(i, ma.width - 1 - j)).abs();
                    assert!(d < 1e-9, "{id} {side:?} ({i},{j}) {d}");
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn command_omega_is_linear(vl in -50.0f64..50.0, vr in -50.0f64..50.0, d in 1.0f64..80.0, c in -5.0f64..5.0) {
        let w = command_omega(vl, vr, d).unwrap();
        let wc = command_omega(c * vl, c * vr, d).unwrap();
        prop_assert!((wc - c * w).abs() <= 1e-12 * (1.0 + w.abs() * c.abs()));
        prop_assert!(command_omega(vl, -vl, d).unwrap().abs() < 1e-15);
    }

    #[test]
    fn summarize_is_swap_stable(idx in 0usize..12, theta in 0.0f64..std::f64::consts::TAU) {
        let cfg = quiet();
        let mut s = WorldState::grasped(Arc::new(build_object_library().swap_remove(idx)), 0.3, &cfg).unwrap();
        s.pose.theta = theta;
        let l = render_depth(&s, Side::Left, &cfg);
        let r = render_depth(&s, Side::Right, &cfg);
        let a = summarize(&l, &r, s.gap).unwrap();
        let b = summarize(&r, &l, s.gap).unwrap();
        prop_assert_eq!(a.valid, b.valid);
        prop_assert!((a.depth_sum - b.depth_sum).abs() < 1e-9);
        if a.valid {
            prop_assert!((a.d_obj - b.d_obj).abs() < 1e-12);
            prop_assert!((a.centroid_x - b.centroid_x).abs() < 1e-12);
        }
    }

    #[test]
    fn estimator_is_pure(theta in -10.0f64..10.0, w in -1.0f64..1.0, k in 0.1f64..1.2) {
        let pooled = vec![0.1; learning::POOLED_LEN];
        let e = OrientationEstimate { theta, k_hat: 1.0 };
        let a = update_from_pooled(e, &pooled, w, 0.05, Some(&Fixed(k))).unwrap();
        let b = update_from_pooled(e, &pooled, w, 0.05, Some(&Fixed(k))).unwrap();
        prop_assert_eq!(a, b);
    }
}
