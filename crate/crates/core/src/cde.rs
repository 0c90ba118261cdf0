//! Linear controlled differential equations `dx = A(dγ) x` driven by
//! piecewise-linear paths.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::path::PiecewiseLinearPath;
use crate::tensor::TruncatedTensor;

/// Seed of the power iteration estimating `‖A‖`.
pub const OPNORM_SEED: u64 = 0x0a_b0_57;

/// Inflation applied to the power-iteration estimate of `‖A‖`.
pub const OPNORM_INFLATION: f64 = 1.001;

const OPNORM_RESTARTS: usize = 8;
const OPNORM_ITERATIONS: usize = 300;

/// `dx_t = A(dγ_t) x_t`, `x_0 = x0`, with `A(v) = Σ v_i A_i`.
#[derive(Debug, Clone)]
pub struct LinearCdeProblem {
    a: Vec<DMatrix<f64>>,
    x0: DVector<f64>,
    driver: Arc<PiecewiseLinearPath>,
    opnorm: f64,
}

impl LinearCdeProblem {
    pub fn new(a: Vec<DMatrix<f64>>, x0: DVector<f64>, driver: Arc<PiecewiseLinearPath>) -> Result<Self> {
        if a.len() != driver.dim() {
            return Err(Error::Shape(format!(
                "{} matrices for a {}-dimensional driver",
                a.len(),
                driver.dim()
            )));
        }
        let e = x0.len();
        if e == 0 {
            return Err(Error::Shape("empty initial state".into()));
        }
        if let Some((i, m)) = a.iter().enumerate().find(|(_, m)| m.nrows() != e || m.ncols() != e) {
            return Err(Error::Shape(format!(
                "A_{} is {}x{}, expected {e}x{e}",
                i + 1,
                m.nrows(),
                m.ncols()
            )));
        }
        if a.iter().any(|m| m.iter().any(|v| !v.is_finite())) || x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entries in A or x0".into()));
        }
        let opnorm = OPNORM_INFLATION * power_iteration_norm(&a);
        Ok(LinearCdeProblem { a, x0, driver, opnorm })
    }

    /// Same vector field and initial state, different driver.
    pub fn with_driver(&self, driver: Arc<PiecewiseLinearPath>) -> Result<Self> {
        if driver.dim() != self.driver.dim() {
            return Err(Error::Shape(format!(
                "driver dimension {} differs from {}",
                driver.dim(),
                self.driver.dim()
            )));
        }
        Ok(LinearCdeProblem {
            driver,
            ..self.clone()
        })
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.a
    }

    pub fn x0(&self) -> &DVector<f64> {
        &self.x0
    }

    pub fn driver(&self) -> &Arc<PiecewiseLinearPath> {
        &self.driver
    }

    pub fn state_dim(&self) -> usize {
        self.x0.len()
    }

    /// Inflated estimate of `max_{|v| = 1} ‖A(v)‖₂`.
    pub fn opnorm(&self) -> f64 {
        self.opnorm
    }

    /// `A(v)`.
    pub fn field(&self, v: &[f64]) -> DMatrix<f64> {
        let e = self.state_dim();
        let mut m = DMatrix::zeros(e, e);
        for (ai, &vi) in self.a.iter().zip(v) {
            m += ai * vi;
        }
        m
    }

    /// Transport `x` from time `s` to `t >= s`.
    pub fn propagate(&self, x: &DVector<f64>, s: f64, t: f64) -> Result<DVector<f64>> {
        if !(s <= t) || s < 0.0 || t > 1.0 {
            return Err(Error::InvalidInput(format!("propagation needs 0 <= s <= t <= 1, got [{s}, {t}]")));
        }
        let times = self.driver.times();
        let mut x = x.clone();
        let mut a = s;
        let mut start = self.driver.value_at(s);
        for &knot in times.iter().filter(|&&u| u > s && u < t).chain(std::iter::once(&t)) {
            if knot <= a {
                continue;
            }
            let end = self.driver.value_at(knot);
            let delta: Vec<f64> = end.iter().zip(&start).map(|(e, b)| e - b).collect();
            x = expm(&self.field(&delta)) * x;
            start = end;
            a = knot;
        }
        Ok(x)
    }

    /// `x_t` as a product of per-segment exponentials applied to `x0`.
    pub fn solve_exact(&self, t: f64) -> Result<DVector<f64>> {
        self.propagate(&self.x0, 0.0, t)
    }

    /// `x` at each of the non-decreasing `times`, propagated incrementally.
    pub fn trajectory(&self, times: &[f64]) -> Result<Vec<DVector<f64>>> {
        let mut out = Vec::with_capacity(times.len());
        let mut x = self.x0.clone();
        let mut prev = 0.0;
        for &t in times {
            if t < prev {
                return Err(Error::InvalidInput("trajectory times must be non-decreasing".into()));
            }
            x = self.propagate(&x, prev, t)?;
            out.push(x.clone());
            prev = t;
        }
        Ok(out)
    }

    /// `Σ_{n <= depth} Σ_w X^n_w A_{w_n} ... A_{w_1} x0` with `X` the
    /// signature of the driver on `[0, t]`.
    pub fn solve_series(&self, t: f64, depth: usize) -> Result<DVector<f64>> {
        let sig = self.driver.signature(0.0, t, depth)?;
        self.contract(&sig)
    }

    /// Contract a tensor against the iterated applications of `A` to `x0`.
    pub fn contract(&self, x: &TruncatedTensor) -> Result<DVector<f64>> {
        let d = self.a.len();
        if x.dim() != d {
            return Err(Error::Shape(format!("tensor dimension {} differs from driver dimension {d}", x.dim())));
        }
        let mut total = self.x0.clone() * x.level(0)[0];
        // words[w] = A_{w_n} ... A_{w_1} x0, row-major in w.
        let mut words = vec![self.x0.clone()];
        for n in 1..=x.depth() {
            let mut next = Vec::with_capacity(words.len() * d);
            for v in &words {
                for ai in &self.a {
                    next.push(ai * v);
                }
            }
            for (v, &c) in next.iter().zip(x.level(n)) {
                total.axpy(c, v, 1.0);
            }
            words = next;
        }
        Ok(total)
    }

    /// `|x0| Σ_{n > depth} (‖A‖ L)^n / n!` with `L` the driver length on `[0, t]`.
    pub fn series_tail_bound(&self, t: f64, depth: usize) -> Result<f64> {
        let z = self.opnorm * self.driver.one_variation(0.0, t)?;
        let mut term = 1.0;
        for n in 1..=depth {
            term *= z / n as f64;
        }
        let mut tail = 0.0;
        let mut n = depth + 1;
        loop {
            term *= z / n as f64;
            tail += term;
            if term <= tail * 1e-17 || term == 0.0 {
                break;
            }
            n += 1;
        }
        Ok(self.x0.norm() * tail)
    }

    /// `2‖A‖ min{ε, ω} + ε (1 + log₂(C/ε)) (‖A‖/β) (e^{‖A‖ω} - 1)`.
    pub fn flow_difference_bound(&self, epsilon: f64, omega_st: f64, beta: f64, c: f64) -> f64 {
        flow_difference_bound(self.opnorm, epsilon, omega_st, beta, c)
    }
}

/// The flow-difference bound for a given operator norm.
pub fn flow_difference_bound(opnorm: f64, epsilon: f64, omega_st: f64, beta: f64, c: f64) -> f64 {
    if epsilon <= 0.0 || opnorm == 0.0 {
        return 0.0;
    }
    2.0 * opnorm * epsilon.min(omega_st)
        + epsilon * (1.0 + (c / epsilon).log2()) * (opnorm / beta) * (opnorm * omega_st).exp_m1()
}

/// `max σ_max(Σ v_i A_i)` over unit `v`, by alternating power iteration
/// from several seeded starts. A lower estimate of the true maximum.
pub fn power_iteration_norm(a: &[DMatrix<f64>]) -> f64 {
    let Some(first) = a.first() else { return 0.0 };
    let e = first.nrows();
    let d = a.len();
    let mut rng = ChaCha8Rng::seed_from_u64(OPNORM_SEED);
    let mut best: f64 = 0.0;
    for _ in 0..OPNORM_RESTARTS {
        let mut v = DVector::from_fn(d, |_, _| rng.random::<f64>() - 0.5);
        let mut w = DVector::from_fn(e, |_, _| rng.random::<f64>() - 0.5);
        if v.norm() == 0.0 || w.norm() == 0.0 {
            continue;
        }
        v.normalize_mut();
        w.normalize_mut();
        let mut value = 0.0;
        for _ in 0..OPNORM_ITERATIONS {
            let m = a.iter().zip(v.iter()).fold(DMatrix::zeros(e, e), |acc, (ai, &vi)| acc + ai * vi);
            let mut u = &m * &w;
            if u.norm() == 0.0 {
                break;
            }
            u.normalize_mut();
            let mut w_next = m.transpose() * &u;
            if w_next.norm() == 0.0 {
                break;
            }
            w_next.normalize_mut();
            w = w_next;
            let mut v_next = DVector::from_iterator(d, a.iter().map(|ai| u.dot(&(ai * &w))));
            let norm = v_next.norm();
            if norm == 0.0 {
                break;
            }
            v_next /= norm;
            v = v_next;
            if (norm - value).abs() <= 1e-15 * norm {
                value = norm;
                break;
            }
            value = norm;
        }
        best = best.max(value);
    }
    best
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm1 = (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = m / 2f64.powi(squarings);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    // ‖B‖ <= 1/2, so the remainder after k terms is below 2 (1/2)^k / k!.
    for k in 1..=30 {
        term = &term * &scaled / k as f64;
        result += &term;
        let size = term.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if size < 1e-17 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(d: usize) -> Arc<PiecewiseLinearPath> {
        let mut end = vec![0.0; d];
        end[0] = 1.0;
        Arc::new(PiecewiseLinearPath::new(vec![0.0, 1.0], vec![vec![0.0; d], end]).unwrap())
    }

    fn rotation() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
    }

    #[test]
    fn zero_field_keeps_the_initial_state() {
        let x0 = DVector::from_vec(vec![1.0, 2.0]);
        let problem = LinearCdeProblem::new(vec![DMatrix::zeros(2, 2)], x0.clone(), line(1)).unwrap();
        assert_eq!(problem.solve_exact(0.7).unwrap(), x0);
        assert_eq!(problem.opnorm(), 0.0);
        assert_eq!(problem.flow_difference_bound(0.1, 1.0, 2.0, 1.0), 0.0);
    }

    #[test]
    fn scalar_exponential_growth() {
        let alpha = 1.3;
        let problem = LinearCdeProblem::new(
            vec![DMatrix::from_element(1, 1, alpha)],
            DVector::from_element(1, 2.0),
            line(1),
        )
        .unwrap();
        let x = problem.solve_exact(0.6).unwrap()[0];
        assert!((x - 2.0 * (alpha * 0.6f64).exp()).abs() < 1e-13);
        assert!((problem.opnorm() - alpha * OPNORM_INFLATION).abs() < 1e-12);
    }

    #[test]
    fn rotation_follows_the_driver() {
        let path = Arc::new(
            PiecewiseLinearPath::new(vec![0.0, 0.3, 1.0], vec![vec![0.0], vec![2.0], vec![-0.5]]).unwrap(),
        );
        let problem = LinearCdeProblem::new(vec![rotation()], DVector::from_vec(vec![1.0, 0.0]), path.clone()).unwrap();
        for t in [0.1, 0.3, 0.55, 1.0] {
            let angle = path.value_at(t)[0];
            let x = problem.solve_exact(t).unwrap();
            assert!((x[0] - angle.cos()).abs() < 1e-13 && (x[1] - angle.sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn expm_matches_closed_forms() {
        let theta = 7.5;
        let r = expm(&(rotation() * theta));
        assert!((r[(0, 0)] - theta.cos()).abs() < 1e-12);
        assert!((r[(1, 0)] - theta.sin()).abs() < 1e-12);
        let nil = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 0.0, 0.0]);
        let e = expm(&nil);
        assert_eq!(e, DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 0.0, 1.0]));
    }

    #[test]
    fn flow_is_multiplicative() {
        let path = Arc::new(
            PiecewiseLinearPath::new(
                vec![0.0, 0.4, 1.0],
                vec![vec![0.0, 0.0], vec![0.5, -0.3], vec![0.2, 0.9]],
            )
            .unwrap(),
        );
        let a1 = DMatrix::from_row_slice(2, 2, &[0.1, -1.0, 0.7, 0.2]);
        let a2 = DMatrix::from_row_slice(2, 2, &[0.0, 0.4, -0.3, 0.5]);
        let problem = LinearCdeProblem::new(vec![a1, a2], DVector::from_vec(vec![0.3, -1.0]), path).unwrap();
        let direct = problem.solve_exact(0.8).unwrap();
        let mid = problem.solve_exact(0.25).unwrap();
        let split = problem.propagate(&mid, 0.25, 0.8).unwrap();
        assert!((direct - split).norm() < 1e-12);
    }

    #[test]
    fn series_depth_zero_is_the_initial_state() {
        let x0 = DVector::from_vec(vec![0.5, 0.25]);
        let problem = LinearCdeProblem::new(vec![rotation()], x0.clone(), line(1)).unwrap();
        assert_eq!(problem.solve_series(0.9, 0).unwrap(), x0);
    }

    #[test]
    fn opnorm_of_two_generators() {
        // A(v) = [[v1, v2], [v2, -v1]] has norm |v| for every v.
        let a1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let a2 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let norm = power_iteration_norm(&[a1, a2]);
        assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn shape_errors() {
        let x0 = DVector::from_vec(vec![1.0, 0.0]);
        assert!(LinearCdeProblem::new(vec![rotation(), rotation()], x0.clone(), line(1)).is_err());
        assert!(LinearCdeProblem::new(vec![DMatrix::zeros(3, 3)], x0, line(1)).is_err());
    }

    #[test]
    fn bound_vanishes_with_epsilon() {
        let big = flow_difference_bound(1.0, 1e-2, 2.0, 20.0, 2.0);
        let small = flow_difference_bound(1.0, 1e-8, 2.0, 20.0, 2.0);
        assert!(small < big * 1e-4);
        assert_eq!(flow_difference_bound(1.0, 0.0, 2.0, 20.0, 2.0), 0.0);
    }
}
