use std::sync::Arc;

use dtactive::control::*;
use dtactive::estimator::{self, command_omega, ContactHold, RatioPredictor};
use dtactive::harness::{self, Driver, Estimation, HarnessConfig, Inversion, RolloutSpec};
use dtactive::world::*;
use dtactive::Error;
use proptest::prelude::*;

fn fresh() -> ControlState {
    ControlState::default()
}

#[test]
fn zero_errors_give_zero_outputs() {
    let g = Gains::default();
    assert_eq!(grip_pd(g.s_ref, &g, &mut fresh()), 0.0);
    assert_eq!(orientation_pd(0.3, 0.3, &g, &mut fresh()), 0.0);
    assert_eq!(position_pd(g.x_center, &g, &mut fresh()), 0.0);
    let pooled = vec![0.0; 384];
    let input = TickInput { theta_d: 0.0, theta_hat: 0.0, depth_sum: g.s_ref, centroid_x: 0.0, d_obj: 30.0, pooled: &pooled };
    let out = control_step(&input, &g, Policy::Identity, &mut fresh()).unwrap();
    assert_eq!(out, TickOutput { v_left: 0.0, v_right: 0.0, v_gap: 0.0 });
}

#[test]
fn grip_closes_when_depth_sum_is_low() {
    let g = Gains::default();
    assert!(grip_pd(0.5 * g.s_ref, &g, &mut fresh()) < 0.0);
    assert!(grip_pd(1.5 * g.s_ref, &g, &mut fresh()) > 0.0);
    assert_eq!(grip_pd(0.0, &Gains { grip_kp: 1.0, ..g.clone() }, &mut fresh()), -g.v_gap_max);
}

#[test]
fn derivative_uses_the_previous_error() {
    let g = Gains { orientation_kp: 0.0, orientation_kd: 0.1, omega_max: 100.0, ..Gains::default() };
    let mut st = fresh();
    assert_eq!(orientation_pd(1.0, 0.0, &g, &mut st), 0.0);
    let w = orientation_pd(1.5, 0.0, &g, &mut st);
    assert!((w - 0.1 * 0.5 / g.dt).abs() < 1e-12);
    st.reset();
    assert_eq!(st, ControlState::default());
}

#[test]
fn identity_policy_passes_the_rate_through() {
    let g = Gains::default();
    let (wc, u) = invert_ratio(0.37, 1.0, &g, &mut fresh()).unwrap();
    assert_eq!((wc, u), (0.37, 1.0));
}

#[test]
fn ratio_clamps_at_u_min() {
    let g = Gains { omega_max: 1.0, u_min: 0.1, ..Gains::default() };
    let (wc, u) = invert_ratio(1.0, 0.01, &g, &mut fresh()).unwrap();
    assert_eq!(u, 0.1);
    assert!((wc - 10.0).abs() < 1e-12);
    let (_, u) = invert_ratio(1.0, 7.0, &g, &mut fresh()).unwrap();
    assert_eq!(u, g.u_max);
    assert!(matches!(invert_ratio(1.0, f64::NAN, &g, &mut fresh()), Err(Error::Control(_))));
}

struct Nan;

impl RatioPredictor for Nan {
    fn predict(&self, _: &[f64], _: f64) -> dtactive::Result<f64> {
        Ok(f64::NAN)
    }
}

#[test]
fn non_finite_policy_output_is_a_control_error() {
    let g = Gains::default();
    let pooled = vec![0.0; 384];
    let input = TickInput { theta_d: 1.0, theta_hat: 0.0, depth_sum: g.s_ref, centroid_x: 0.0, d_obj: 30.0, pooled: &pooled };
    assert!(matches!(control_step(&input, &g, Policy::Network(&Nan), &mut fresh()), Err(Error::Control(_))));
}

#[test]
fn belt_command_examples() {
    let g = Gains::default();
    assert_eq!(belt_commands(0.0, 30.0, 3.0, &g).unwrap(), (3.0, -3.0));
    assert_eq!(belt_commands(0.5, 40.0, 0.0, &g).unwrap(), (10.0, 10.0));
    assert_eq!(belt_commands(10.0, 40.0, 0.0, &g).unwrap(), (g.v_belt_max, g.v_belt_max));
    assert!(matches!(belt_commands(0.5, 0.0, 0.0, &g), Err(Error::Domain(_))));
}

#[test]
fn control_step_is_deterministic() {
    let g = Gains::default();
    let pooled = vec![0.2; 384];
    let input = TickInput { theta_d: 0.8, theta_hat: 0.1, depth_sum: 650.0, centroid_x: 0.4, d_obj: 31.0, pooled: &pooled };
    let (mut a, mut b) = (fresh(), fresh());
    for _ in 0..3 {
        let oa = control_step(&input, &g, Policy::Given(0.93), &mut a).unwrap();
        let ob = control_step(&input, &g, Policy::Given(0.93), &mut b).unwrap();
        assert_eq!(oa, ob);
        assert_eq!(a, b);
    }
}

#[test]
fn gains_validation_names_the_key() {
    let g = Gains { u_min: 0.0, ..Gains::default() };
    match g.validate_with_prefix("gains.") {
        Err(Error::ConfigRange { key, .. }) => assert_eq!(key, "gains.u_min"),
        other => panic!("{other:?}"),
    }
    assert!(Gains { grip_kd: -1.0, ..Gains::default() }.validate_with_prefix("").is_err());
}

/// Depth-sum regulation on A1 from a light initial grasp.
#[test]
fn grip_settles_within_two_seconds() {
    let h = HarnessConfig { initial_penetration: 0.1, settle_s: 3.0, ..HarnessConfig::default() };
    let gains = Gains::default();
    let spec = RolloutSpec {
        object: Arc::new(library_object("A1").unwrap()),
        profile: "grip".into(),
        seed: 3,
        driver: Driver::Constant { omega: 0.5 },
        estimation: Estimation::Raw,
        inversion: Inversion::Identity,
    };
    let traj = harness::run(&spec, &WorldConfig::default(), &gains, &h).unwrap();
    let s: Vec<f64> = traj.frames.iter().take(60).map(|f| f.depth_sum).collect();
    let band = |v: f64| (v - gains.s_ref).abs() <= 0.05 * gains.s_ref;
    assert!(!band(s[0]), "initial depth sum {} already in band", s[0]);
    let two_s = (2.0 / gains.dt).round() as usize;
    let first = (0..=two_s).find(|&k| s[k..].iter().all(|&v| band(v))).expect("settles within 2 s");
    assert!(first <= two_s, "settled at frame {first}");
}

/// Position loop recentres an object displaced 5 mm along the belts.
#[test]
fn position_loop_recentres_within_three_seconds() {
    let cfg = WorldConfig { noise_sigma: 0.0, ..WorldConfig::default() };
    let g = Gains::default();
    for offset in [5.0, -5.0] {
        let mut state = WorldState::grasped(Arc::new(library_object("A1").unwrap()), 0.3, &cfg).unwrap();
        state.pose.x = offset;
        let mut st = fresh();
        let mut hold = ContactHold::default();
        let steps = (3.0 / cfg.dt).round() as usize;
        for _ in 0..steps {
            let l = render_depth(&state, Side::Left, &cfg);
            let r = render_depth(&state, Side::Right, &cfg);
            let s = estimator::summarize(&l, &r, state.gap).unwrap();
            let (cx, d) = hold.update(&s).unwrap();
            let v_gap = grip_pd(s.depth_sum, &g, &mut st);
            let v_comp = position_pd(cx, &g, &mut st);
            let (v_left, v_right) = belt_commands(0.0, d, v_comp, &g).unwrap();
            step_in_place(&mut state, BeltCommand { v_left, v_right, v_gap }, &cfg).unwrap();
        }
        assert!(state.pose.x.abs() < 1.0, "offset {offset}: x = {}", state.pose.x);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn belt_commands_invert_command_omega(w in -5.0f64..5.0, d in 1.0f64..80.0, v in -20.0f64..20.0) {
        let (l, r) = belt_commands_unclamped(w, d, v).unwrap();
        let back = command_omega(l, r, d).unwrap();
        prop_assert!((back - w).abs() < 1e-12, "{} vs {}", back, w);
    }
}

proptest! {
    #[test]
    fn pd_outputs_respect_their_limits(e in -1e4f64..1e4, prev in -1e4f64..1e4) {
        let g = Gains::default();
        let mut st = ControlState { grip_error: Some(prev), orientation_error: Some(prev), position_error: Some(prev), ..fresh() };
        prop_assert!(grip_pd(e, &g, &mut st).abs() <= g.v_gap_max);
        prop_assert!(orientation_pd(e, 0.0, &g, &mut st).abs() <= g.omega_max);
        prop_assert!(position_pd(e, &g, &mut st).abs() <= 0.5 * g.v_belt_max);
        let (l, r) = belt_commands(e, 30.0, e, &g).unwrap();
        prop_assert!(l.abs() <= g.v_belt_max && r.abs() <= g.v_belt_max);
    }

    #[test]
    fn pd_is_odd_with_zero_history(e in -0.4f64..0.4) {
        let g = Gains::default();
        let a = orientation_pd(e, 0.0, &g, &mut fresh());
        let b = orientation_pd(-e, 0.0, &g, &mut fresh());
        prop_assert!((a + b).abs() < 1e-15);
        let a = position_pd(e, &g, &mut fresh());
        let b = position_pd(-e, &g, &mut fresh());
        prop_assert!((a + b).abs() < 1e-15);
    }

    #[test]
    fn control_step_outputs_are_finite(theta_d in -4.0f64..4.0, theta_hat in -4.0f64..4.0, s in 0.0f64..3000.0,
                                       x in -20.0f64..20.0, d in 5.0f64..60.0, u in 0.0f64..3.0) {
        let g = Gains::default();
        let pooled = vec![0.0; 384];
        let input = TickInput { theta_d, theta_hat, depth_sum: s, centroid_x: x, d_obj: d, pooled: &pooled };
        let out = control_step(&input, &g, Policy::Given(u), &mut fresh()).unwrap();
        prop_assert!(out.v_left.is_finite() && out.v_right.is_finite() && out.v_gap.is_finite());
    }
}
