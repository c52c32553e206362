use dtactive::learning::*;
use dtactive::world::DepthMap;
use dtactive::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_sample(rng: &mut ChaCha8Rng, len: usize) -> Sample {
    Sample {
        features: (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
        label: rng.random_range(0.5..1.1),
        command_omega: 0.5,
    }
}

fn small_dims(rng: &mut ChaCha8Rng) -> Vec<usize> {
    vec![rng.random_range(2..12), rng.random_range(2..10), rng.random_range(2..6), 1]
}

#[test]
fn zero_weights_give_point_six() {
    let m = ModelParams::zeros(Role::N, &DEFAULT_DIMS).unwrap();
    assert_eq!(m.forward(&vec![0.3; FEATURE_LEN]).unwrap(), 0.6);
    assert!(matches!(m.forward(&[0.0; 3]), Err(Error::Dimension(_)) | Err(Error::Model(_))));
}

#[test]
fn gradients_match_central_differences_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let dims = small_dims(&mut rng);
        let m = ModelParams::init(Role::N, &dims, i).unwrap();
        let s = random_sample(&mut rng, dims[0]);
        worst = worst.max(grad_check(&m, &s, 1e-5).unwrap());
    }
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn full_size_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = ModelParams::init(Role::Pi, &DEFAULT_DIMS, 9).unwrap();
    let mut s = random_sample(&mut rng, FEATURE_LEN);
    for f in &mut s.features {
        *f = f.abs();
    }
    assert!(grad_check(&m, &s, 1e-5).unwrap() < 1e-4);
}

#[test]
fn linear_variant_gradient_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..10 {
        let dims = small_dims(&mut rng);
        let m = ModelParams::init(Role::N, &dims, 40 + i).unwrap().with_variant(Activation::Identity, Head::Linear);
        let s = random_sample(&mut rng, dims[0]);
        let e = grad_check(&m, &s, 0.1).unwrap();
        assert!(e < 1e-11, "{e}");
    }
}

#[test]
fn grad_check_rejects_zero_step() {
    let m = ModelParams::init(Role::N, &[3, 2, 1], 0).unwrap();
    let s = Sample { features: vec![0.1, 0.2, 0.3], label: 1.0, command_omega: 0.5 };
    assert!(matches!(grad_check(&m, &s, 0.0), Err(Error::Domain(_))));
}

#[test]
fn loss_and_grad_needs_a_batch() {
    let m = ModelParams::init(Role::N, &[3, 2, 1], 0).unwrap();
    assert!(loss_and_grad(&m, &[]).is_err());
    let s = Sample { features: vec![0.1, 0.2, 0.3], label: 1.0, command_omega: 0.5 };
    let (l, g) = loss_and_grad(&m, &[s.clone(), s.clone()]).unwrap();
    let (l1, g1) = loss_and_grad(&m, &[s]).unwrap();
    assert!((l - l1).abs() < 1e-15);
    assert_eq!(g.len(), g1.len());
    for (a, b) in g.iter().zip(&g1) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn init_is_seeded_and_bounded() {
    let a = ModelParams::init(Role::N, &DEFAULT_DIMS, 7).unwrap();
    let b = ModelParams::init(Role::N, &DEFAULT_DIMS, 7).unwrap();
    let c = ModelParams::init(Role::N, &DEFAULT_DIMS, 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let first_bound = 1.0 / (FEATURE_LEN as f64).sqrt();
    assert!(a.params()[..FEATURE_LEN * 64].iter().all(|p| p.abs() <= first_bound));
}

fn toy_dataset(n: usize) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..1.0)).collect();
            let label = 0.8 + 0.2 * x[0] - 0.1 * x[3];
            Sample { features: x, label, command_omega: 0.4 }
        })
        .collect()
}

fn toy_config(seed: u64) -> TrainConfig {
    TrainConfig { epochs: 30, seed, ..TrainConfig::default() }
}

#[test]
fn training_reduces_the_loss() {
    let data = toy_dataset(400);
    let r = train_with_dims(&data, &toy_config(1), Role::N, &[6, 8, 4, 1]).unwrap();
    assert_eq!(r.epoch_losses.len(), 30);
    let last = *r.epoch_losses.last().unwrap();
    assert!(last < 0.5 * r.initial_loss, "{} -> {last}", r.initial_loss);
    let kept: Vec<&Sample> = data.iter().collect();
    assert!(mean_loss(&r.model, &kept).unwrap() < r.initial_loss);
}

#[test]
fn training_is_deterministic_given_the_seed() {
    let data = toy_dataset(200);
    let a = train_with_dims(&data, &toy_config(4), Role::Pi, &[6, 8, 4, 1]).unwrap();
    let b = train_with_dims(&data, &toy_config(4), Role::Pi, &[6, 8, 4, 1]).unwrap();
    let c = train_with_dims(&data, &toy_config(5), Role::Pi, &[6, 8, 4, 1]).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.epoch_losses, b.epoch_losses);
    assert_ne!(a.model, c.model);
}

#[test]
fn parallel_training_matches_serial_closely() {
    let data = toy_dataset(300);
    let serial = train_with_dims(&data, &toy_config(6), Role::N, &[6, 8, 4, 1]).unwrap();
    let par = train_with_dims(&data, &TrainConfig { parallel: true, ..toy_config(6) }, Role::N, &[6, 8, 4, 1]).unwrap();
    for (a, b) in serial.model.params().iter().zip(par.model.params()) {
        assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
    }
}

#[test]
fn samples_below_the_floor_are_dropped() {
    let mut data = toy_dataset(10);
    data[0].command_omega = 0.01;
    data[1].label = f64::NAN;
    assert_eq!(filter_samples(&data, 0.02).len(), 8);
    for s in &mut data {
        s.command_omega = 0.0;
    }
    assert!(matches!(train_with_dims(&data, &toy_config(0), Role::N, &[6, 4, 1]), Err(Error::Dataset(_))));
}

#[test]
fn train_config_validation() {
    let bad = TrainConfig { learning_rate: 0.0, ..TrainConfig::default() };
    match bad.validate_with_prefix("training.") {
        Err(Error::ConfigRange { key, .. }) => assert_eq!(key, "training.learning_rate"),
        other => panic!("{other:?}"),
    }
    assert!(TrainConfig { epochs: 0, ..TrainConfig::default() }.validate_with_prefix("").is_err());
    assert!(TrainConfig { batch_size: 0, ..TrainConfig::default() }.validate_with_prefix("").is_err());
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let m = ModelParams::init(Role::Pi, &DEFAULT_DIMS, 21).unwrap();
    let text = checkpoint::to_text(&m, &["seed: 21".into()]);
    assert!(text.starts_with("DTACTIVE-MODEL v1 pi\n"));
    let back = checkpoint::from_text(&text).unwrap();
    assert_eq!(back, m);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("pi.model");
    checkpoint::save(&m, &p, &[]).unwrap();
    assert_eq!(checkpoint::load(&p).unwrap(), m);
    assert!(checkpoint::from_text("garbage").is_err());
    assert!(checkpoint::load(&dir.path().join("missing.model")).is_err());
}

#[test]
fn pooling_averages_cells() {
    let mut map = DepthMap::zeros(115, 90, 0.4);
    for v in &mut map.values {
        *v = 0.75;
    }
    let p = pool(&map, 1.5).unwrap();
    assert_eq!(p.len(), 192);
    assert!(p.iter().all(|v| (v - 0.5).abs() < 1e-12));
    let f = featurize(&map, &map, 0.3, 1.5, 1.0).unwrap();
    assert_eq!(f.len(), FEATURE_LEN);
    assert_eq!(f[FEATURE_LEN - 1], 0.3);
    assert!(pool(&DepthMap::zeros(8, 8, 0.4), 1.5).is_err());
}

#[test]
fn half_turn_swaps_and_mirrors() {
    let pooled: Vec<f64> = (0..POOLED_LEN).map(|i| i as f64).collect();
    let h = half_turn_pooled(&pooled);
    assert_eq!(h[0], 192.0 + 15.0);
    assert_eq!(h[192], 15.0);
    assert_eq!(half_turn_pooled(&h), pooled);
}

proptest! {
    #[test]
    fn output_stays_in_range(seed in 0u64..1000, scale in -1e6f64..1e6) {
        let m = ModelParams::init(Role::N, &[5, 4, 3, 1], seed).unwrap();
        let y = m.forward(&[scale, -scale, 0.5 * scale, 1.0, scale]).unwrap();
        prop_assert!(y > 0.0 && y <= OUTPUT_SCALE);
    }
}
