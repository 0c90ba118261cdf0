use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rough_core::bounds::frac_factorial;
use rough_core::fixtures::{random_path, two_segment_path};
use rough_core::path::PiecewiseLinearPath;
use rough_core::tensor::truncated_product;
use statrs::function::gamma::gamma;

#[test]
fn two_segment_level_two() {
    let sig = two_segment_path().signature(0.0, 1.0, 2).unwrap();
    assert_eq!(sig.level(1), &[1.0, 1.0]);
    assert_eq!(sig.level(2), &[0.5, 1.0, 0.0, 0.5]);
}

#[test]
fn chen_on_random_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let dim = rng.random_range(1..=3);
        let segments = rng.random_range(1..=20);
        let path = random_path(&mut rng, dim, segments, 1.0);
        let mut cut = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
        cut.sort_by(f64::total_cmp);
        let [s, u, t] = cut;
        let joined = truncated_product(&path.signature(s, u, 5).unwrap(), &path.signature(u, t, 5).unwrap()).unwrap();
        assert!(joined.max_abs_diff(&path.signature(s, t, 5).unwrap()).unwrap() < 1e-10);
    }
}

#[test]
fn signature_ignores_time_reparametrization() {
    let points = vec![vec![0.0, 0.0], vec![0.3, -0.2], vec![0.1, 0.9], vec![-0.4, 0.5]];
    let a = PiecewiseLinearPath::new(vec![0.0, 0.2, 0.5, 1.0], points.clone()).unwrap();
    let b = PiecewiseLinearPath::new(vec![0.0, 0.6, 0.7, 1.0], points).unwrap();
    let diff = a.signature(0.0, 1.0, 6).unwrap().max_abs_diff(&b.signature(0.0, 1.0, 6).unwrap()).unwrap();
    assert!(diff < 1e-14);
}

#[test]
fn symmetric_part_of_level_two_is_half_the_square_of_level_one() {
    let path = Arc::new(random_path(&mut ChaCha8Rng::seed_from_u64(3), 3, 7, 1.0));
    let sig = path.signature(0.1, 0.8, 2).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let sym = sig.level(2)[i * 3 + j] + sig.level(2)[j * 3 + i];
            assert!((sym - sig.level(1)[i] * sig.level(1)[j]).abs() < 1e-13);
        }
    }
}

#[test]
fn fractional_factorial_matches_an_independent_gamma() {
    for j in 0..200 {
        let x = j as f64 * 0.037;
        let ours = frac_factorial(x);
        let reference = gamma(x + 1.0);
        assert!((ours - reference).abs() / reference < 1e-12, "x = {x}: {ours} vs {reference}");
    }
}
