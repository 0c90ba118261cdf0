//! Deterministic low-discrepancy samples on the time simplex.
//!
//! Points come from the Kronecker (generalised golden ratio) sequence with a
//! seed-dependent Cranley-Patterson shift, so any prefix of a sample set is
//! itself a well-spread sample and the same seed always reproduces it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Root of `x^(n+1) = x + 1`, the generalised golden ratio in `n` dimensions.
fn harmonious(n: usize) -> f64 {
    let mut x = 2.0f64;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (n as f64 + 1.0));
    }
    x
}

fn kronecker<const N: usize>(count: usize, seed: u64) -> Vec<[f64; N]> {
    let phi = harmonious(N);
    let mut alpha = [0.0; N];
    for (j, a) in alpha.iter_mut().enumerate() {
        *a = phi.powi(-(j as i32 + 1)).fract();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shift = [0.0; N];
    for s in shift.iter_mut() {
        *s = rng.random::<f64>();
    }
    (1..=count)
        .map(|i| {
            let mut p = [0.0; N];
            for j in 0..N {
                p[j] = (shift[j] + alpha[j] * i as f64).fract();
            }
            p
        })
        .collect()
}

/// `count` pairs `0 <= s < t <= 1`.
pub fn simplex_pairs(count: usize, seed: u64) -> Vec<(f64, f64)> {
    kronecker::<2>(count, seed)
        .into_iter()
        .map(|[a, b]| if a <= b { (a, b) } else { (b, a) })
        .map(|(s, t)| if s == t { (s, (s + 1.0) / 2.0) } else { (s, t) })
        .collect()
}

/// `count` triples `0 <= s < u < t <= 1`.
pub fn simplex_triples(count: usize, seed: u64) -> Vec<(f64, f64, f64)> {
    kronecker::<3>(count, seed)
        .into_iter()
        .map(|mut p| {
            p.sort_by(f64::total_cmp);
            (p[0], p[1], p[2])
        })
        .filter(|(s, u, t)| s < u && u < t)
        .collect()
}
