//! Deterministic test paths and problems.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cde::LinearCdeProblem;
use crate::error::Result;
use crate::path::PiecewiseLinearPath;

/// `(0,0) -> (1,0) -> (1,1)` over `[0, 1/2]` and `[1/2, 1]`.
pub fn two_segment_path() -> PiecewiseLinearPath {
    PiecewiseLinearPath::new(
        vec![0.0, 0.5, 1.0],
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]],
    )
    .expect("valid fixture")
}

/// A path with `segments` pieces, random knot times and increments with
/// coordinates uniform in `[-scale, scale]`.
pub fn random_path(rng: &mut impl Rng, dim: usize, segments: usize, scale: f64) -> PiecewiseLinearPath {
    let segments = segments.max(1);
    // Spacings bounded away from zero keep the knots strictly increasing.
    let gaps: Vec<f64> = (0..segments).map(|_| 0.2 + rng.random::<f64>()).collect();
    let total: f64 = gaps.iter().sum();
    let mut times = Vec::with_capacity(segments + 1);
    times.push(0.0);
    let mut acc = 0.0;
    for g in &gaps[..segments - 1] {
        acc += g / total;
        times.push(acc);
    }
    times.push(1.0);
    let mut points = vec![vec![0.0; dim]];
    for _ in 0..segments {
        let last = points.last().unwrap().clone();
        points.push(last.iter().map(|x| x + scale * (2.0 * rng.random::<f64>() - 1.0)).collect());
    }
    PiecewiseLinearPath::new(times, points).expect("random path is valid")
}

pub fn seeded_random_path(seed: u64, dim: usize, segments: usize, scale: f64) -> PiecewiseLinearPath {
    random_path(&mut ChaCha8Rng::seed_from_u64(seed), dim, segments, scale)
}

/// Smooth perturbation `φ(t) = a (sin(2π f_i t + θ_i) - sin θ_i)` with
/// `f_i = frequency + i` and `θ_i = i π / 3` in coordinate `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub frequency: f64,
    /// Uniform samples of `[0, 1]` added to the base knots.
    pub grid: usize,
}

impl Sinusoid {
    pub fn offset(&self, i: usize, t: f64) -> f64 {
        let phase = i as f64 * PI / 3.0;
        let f = self.frequency + i as f64;
        self.amplitude * ((2.0 * PI * f * t + phase).sin() - phase.sin())
    }

    /// `base + φ`, sampled at the base knots and the grid.
    pub fn apply(&self, base: &PiecewiseLinearPath) -> Result<PiecewiseLinearPath> {
        let mut times: Vec<f64> = base.times().to_vec();
        times.extend((0..=self.grid).map(|j| j as f64 / self.grid as f64));
        times.sort_by(f64::total_cmp);
        times.dedup();
        let points = times
            .iter()
            .map(|&t| {
                base.value_at(t)
                    .into_iter()
                    .enumerate()
                    .map(|(i, x)| x + self.offset(i, t))
                    .collect()
            })
            .collect();
        PiecewiseLinearPath::new(times, points)
    }
}

/// `J = [[0, -1], [1, 0]]`.
pub fn rotation_generator() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
}

/// Scalar driver whose excursions stay within `[-1, 1]`.
pub fn rotation_driver() -> PiecewiseLinearPath {
    PiecewiseLinearPath::new(
        vec![0.0, 0.25, 0.5, 0.75, 1.0],
        vec![vec![0.0], vec![0.8], vec![-0.4], vec![0.9], vec![0.3]],
    )
    .expect("valid fixture")
}

/// `dx = J x dγ`, `x0 = (1, 0)`, driven by [`rotation_driver`].
pub fn rotation_problem() -> LinearCdeProblem {
    LinearCdeProblem::new(
        vec![rotation_generator()],
        DVector::from_vec(vec![1.0, 0.0]),
        Arc::new(rotation_driver()),
    )
    .expect("valid fixture")
}

/// Random `A_1..A_d` with entries in `[-1, 1]`, rescaled so that each has
/// Frobenius norm `norm / sqrt(d)`, and a unit initial state.
pub fn random_cde_problem(
    rng: &mut impl Rng,
    driver: Arc<PiecewiseLinearPath>,
    state_dim: usize,
    norm: f64,
) -> Result<LinearCdeProblem> {
    let d = driver.dim();
    let a = (0..d)
        .map(|_| {
            let m = DMatrix::from_fn(state_dim, state_dim, |_, _| 2.0 * rng.random::<f64>() - 1.0);
            let f = m.norm();
            m * (norm / (d as f64).sqrt() / f)
        })
        .collect();
    let x0 = DVector::from_fn(state_dim, |_, _| 2.0 * rng.random::<f64>() - 1.0).normalize();
    LinearCdeProblem::new(a, x0, driver)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_paths_are_reproducible() {
        let a = seeded_random_path(4, 3, 12, 1.0);
        let b = seeded_random_path(4, 3, 12, 1.0);
        assert_eq!(a, b);
        assert_eq!(a.num_segments(), 12);
        assert_eq!(a.dim(), 3);
    }

    #[test]
    fn perturbation_vanishes_at_the_origin_and_keeps_the_knots() {
        let base = two_segment_path();
        let wave = Sinusoid {
            amplitude: 0.01,
            frequency: 2.0,
            grid: 64,
        };
        let y = wave.apply(&base).unwrap();
        assert_eq!(y.value_at(0.0), vec![0.0, 0.0]);
        assert!(y.times().contains(&0.5));
        let dev = (0..=100)
            .map(|j| {
                let t = j as f64 / 100.0;
                let (a, b) = (base.value_at(t), y.value_at(t));
                a.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        assert!(dev <= 2.0 * 0.01 + 1e-15);
    }

    #[test]
    fn rotation_driver_stays_in_the_unit_band() {
        let driver = rotation_driver();
        assert!(driver.points().iter().all(|p| p[0].abs() <= 1.0));
    }
}
