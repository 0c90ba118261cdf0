use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rough_core::cde::LinearCdeProblem;
use rough_core::fixtures::{random_cde_problem, random_path, rotation_problem};

/// Classical RK4 on `dx/dt = A(γ'(t)) x`, stepping inside each segment.
fn rk4(problem: &LinearCdeProblem, t_end: f64, steps_per_segment: usize) -> DVector<f64> {
    let driver = problem.driver();
    let mut x = problem.x0().clone();
    let times = driver.times();
    for (j, w) in times.windows(2).enumerate() {
        let (a, b) = (w[0], w[1].min(t_end));
        if b <= a {
            break;
        }
        let velocity: Vec<f64> = driver.points()[j + 1]
            .iter()
            .zip(&driver.points()[j])
            .map(|(p, q)| (p - q) / (w[1] - w[0]))
            .collect();
        let m: DMatrix<f64> = problem.field(&velocity);
        let h = (b - a) / steps_per_segment as f64;
        for _ in 0..steps_per_segment {
            let k1 = &m * &x;
            let k2 = &m * (&x + &k1 * (h / 2.0));
            let k3 = &m * (&x + &k2 * (h / 2.0));
            let k4 = &m * (&x + &k3 * h);
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
    }
    x
}

#[test]
fn exact_flow_matches_runge_kutta_on_the_rotation() {
    let problem = rotation_problem();
    for t in [0.1, 0.5, 0.9, 1.0] {
        let diff = (problem.solve_exact(t).unwrap() - rk4(&problem, t, 2000)).norm();
        assert!(diff < 1e-10, "t = {t}: {diff}");
    }
    // A rotation keeps the norm.
    assert!((problem.solve_exact(1.0).unwrap().norm() - 1.0).abs() < 1e-13);
}

#[test]
fn exact_flow_matches_runge_kutta_on_random_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5 {
        let driver = Arc::new(random_path(&mut rng, 2, 5, 0.5));
        let problem = random_cde_problem(&mut rng, driver, 3, 1.0).unwrap();
        let diff = (problem.solve_exact(1.0).unwrap() - rk4(&problem, 1.0, 4000)).norm();
        assert!(diff < 1e-9 * problem.solve_exact(1.0).unwrap().norm().max(1.0), "{diff}");
    }
}

#[test]
fn series_converges_with_depth() {
    let problem = rotation_problem();
    let exact = problem.solve_exact(1.0).unwrap();
    let mut last = f64::INFINITY;
    for depth in [2, 4, 6, 8, 10, 12] {
        let err = (problem.solve_series(1.0, depth).unwrap() - &exact).norm();
        assert!(err <= problem.series_tail_bound(1.0, depth).unwrap() + 1e-14);
        assert!(err < last);
        last = err;
    }
    assert!(last < 1e-9);
}
