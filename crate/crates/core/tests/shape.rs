use brsim_core::gauss::smallest_argmax;
use brsim_core::shape::default_window;
use brsim_core::stats::TwoSampleTest;
use brsim_core::{
    estimate_lambda_p, sample_shape, LambdaCache, RejectionShapes, ShapeError, ShapeSampler,
    ShapeSource, StreamKey, VariogramModel,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn brownian() -> VariogramModel {
    VariogramModel::new(1.0, 0.5).unwrap()
}

#[test]
fn acceptance_rate_at_unit_step_beats_lower_bound() {
    let mut rng = StreamKey::new(11, 4, 0).stream();
    let est = estimate_lambda_p(&brownian(), 1.0, 20.0, 100_000, &mut rng).unwrap();
    let lower = 0.25 * (1.0 - (-0.5f64).exp()).powi(2);
    let n = est.n_samples as f64;
    let se = (est.acceptance_rate * (1.0 - est.acceptance_rate) / n).sqrt();
    assert!(est.acceptance_rate >= lower - 4.0 * se);
    assert!(est.lambda_p * 1.0 >= lower - 4.0 * est.standard_error);
    assert!(est.lambda_p >= est.acceptance_rate);
}

#[test]
fn lambda_at_wide_step_is_near_one_over_p() {
    let p = 10.0;
    let mut rng = StreamKey::new(12, 4, 0).stream();
    let est = estimate_lambda_p(&brownian(), p, 40.0, 100_000, &mut rng).unwrap();
    let lp = est.lambda_p * p;
    assert!((0.85..=1.05).contains(&lp), "λp = {lp}");
    assert!(lp >= est.acceptance_rate);
}

/// Brute force: two independent random walks with N(-p/2, p) steps, kept
/// when the smallest maximizer is the origin.
fn brute_force_at_step(p: f64, half: usize, wanted: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = Normal::new(-p / 2.0, p.sqrt()).unwrap();
    let mut out = Vec::with_capacity(wanted);
    while out.len() < wanted {
        let mut path = vec![0.0; 2 * half + 1];
        for k in 1..=half {
            path[half + k] = path[half + k - 1] + step.sample(&mut rng);
            path[half - k] = path[half - k + 1] + step.sample(&mut rng);
        }
        if smallest_argmax(&path) == half {
            out.push(path[half + 1]);
        }
    }
    out
}

#[test]
fn marginal_at_one_step_matches_brute_force() {
    let (p, w) = (1.0, 6.0);
    let sampler = ShapeSampler::new(&brownian(), p, w).unwrap();
    let i = sampler.window().index_of(p).unwrap();
    let ours: Vec<f64> = (0..2000u64)
        .map(|r| {
            sampler
                .sample(&mut StreamKey::new(13, 4, r).stream())
                .unwrap()
                .0
                .values()[i]
        })
        .collect();
    let theirs = brute_force_at_step(p, 6, 2000, 99);
    let t = TwoSampleTest::new(&ours, &theirs).unwrap();
    assert!(t.passes(), "D = {} crit = {}", t.statistic, t.critical);
}

#[test]
fn rejection_source_counts_attempts() {
    let sampler = ShapeSampler::new(&brownian(), 0.5, 8.0).unwrap();
    let mut src = RejectionShapes::new(sampler);
    let key = StreamKey::new(1, 4, 0);
    let a = src.next_shape(key.with_path(0)).unwrap();
    let b = src.next_shape(key.with_path(0)).unwrap();
    assert_eq!(a, b);
    assert!(src.attempts() >= 2);
    assert_eq!(src.window().half_width(), 8.0);
    assert_eq!(a.at_offset(100), f64::NEG_INFINITY);
    assert_eq!(a.at_offset(0), 0.0);
}

#[test]
fn invalid_windows_and_sample_counts() {
    assert!(matches!(
        ShapeSampler::new(&brownian(), 1.0, 3.0),
        Err(ShapeError::InvalidWindow { .. })
    ));
    assert!(matches!(
        ShapeSampler::new(&brownian(), 0.3, 5.0),
        Err(ShapeError::InvalidWindow { .. })
    ));
    let mut rng = StreamKey::new(1, 4, 0).stream();
    assert!(matches!(
        estimate_lambda_p(&brownian(), 1.0, 8.0, 999, &mut rng),
        Err(ShapeError::TooFewSamples(999))
    ));
}

#[test]
fn default_window_covers_the_interval() {
    let w = default_window(&brownian(), 2.0, 0.1);
    assert!((w - 22.0).abs() < 1e-9);
    // near alpha = 2 the spread factor is capped
    let steep = VariogramModel::new(1.99, 3.0).unwrap();
    assert!((default_window(&steep, 2.0, 0.1) - 102.0).abs() < 1e-9);
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cache.json");
    let mut cache = LambdaCache::load(&path).unwrap();
    assert!(cache.is_empty());
    let mut rng = StreamKey::new(2, 4, 0).stream();
    let est = estimate_lambda_p(&brownian(), 1.0, 8.0, 2000, &mut rng).unwrap();
    cache.insert(&brownian(), est);
    cache.insert(&brownian(), est);
    cache.save(&path).unwrap();
    let back = LambdaCache::load(&path).unwrap();
    assert_eq!(back.len(), 1);
    assert_eq!(back.get(&brownian(), 1.0, 8.0), Some(est));
    assert_eq!(back.get(&brownian(), 1.0, 9.0), None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn accepted_shapes_peak_at_the_origin(alpha in 0.2f64..1.95, seed in any::<u64>()) {
        let model = VariogramModel::new(alpha, 0.5).unwrap();
        let shape = sample_shape(&model, 0.5, 5.0, &mut StreamKey::new(seed, 4, 0).stream()).unwrap();
        let v = shape.values();
        let c = shape.window().center();
        prop_assert_eq!(v[c], 0.0);
        prop_assert!(v.iter().all(|&x| x <= 0.0));
        prop_assert_eq!(smallest_argmax(v), c);
    }
}
