//! ω-balanced dyadic partitions.
//!
//! A total `K`-dyadic partition of `[s, t]` has `2^K + 1` points and every
//! stride-`2^m` coarsening is balanced: consecutive pieces around each odd
//! point carry equal control. It is built by repeatedly inserting the
//! balance point of every consecutive pair.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::path::Control;

/// Default relative tolerance for [`balance_point`].
pub const DEFAULT_BALANCE_TOL: f64 = 1e-12;

/// Which side keeps a sampled exact root during bisection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Bracketing {
    /// Maintain `f(lo) < 0 <= f(hi)`.
    #[default]
    Upper,
    /// Maintain `f(lo) <= 0 < f(hi)`.
    Lower,
}

/// The point `u` in `(s, t)` with `ω(s, u) = ω(u, t)`, by bisection on
/// `f(u) = ω(s, u) - ω(u, t)`.
///
/// Bisection stops once `|f(u)| <= tol · ω(s, t)` and the bracket is no
/// wider than `tol · (t - s)`, or when the bracket cannot shrink further.
pub fn balance_point(omega: &Control, s: f64, t: f64, tol: f64) -> Result<f64> {
    balance_point_with(omega, s, t, tol, Bracketing::Upper)
}

pub fn balance_point_with(omega: &Control, s: f64, t: f64, tol: f64, bracketing: Bracketing) -> Result<f64> {
    if !(s < t) {
        return Err(Error::InvalidInput(format!("balance point needs s < t, got [{s}, {t}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let total = omega.eval(s, t);
    if total == 0.0 {
        return Ok(0.5 * (s + t));
    }
    if !omega.is_strictly_monotone() {
        return Err(Error::NonMonotoneControl {
            s,
            t,
            reason: format!("{} has flat stretches, balance points are not unique", omega.description()),
        });
    }
    if let Some(u) = omega.exact_balance_point(s, t) {
        return Ok(u);
    }
    let f = |u: f64| omega.eval(s, u) - omega.eval(u, t);
    let (f_lo, f_hi) = (f(s), f(t));
    if !(f_lo <= 0.0 && f_hi >= 0.0) {
        return Err(Error::NonMonotoneControl {
            s,
            t,
            reason: format!("ω(s,u) - ω(u,t) has no sign change (f(s) = {f_lo:e}, f(t) = {f_hi:e})"),
        });
    }
    let (mut lo, mut hi) = (s, t);
    let residual_tol = tol * total;
    let width_tol = tol * (t - s);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Bracket collapsed to adjacent floats.
            return Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi });
        }
        let fm = f(mid);
        if fm.abs() <= residual_tol && hi - lo <= width_tol {
            return Ok(mid);
        }
        let go_right = match bracketing {
            Bracketing::Upper => fm < 0.0,
            Bracketing::Lower => fm <= 0.0,
        };
        if go_right {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// A total `K`-dyadic partition `s = u_0 < ... < u_{2^K} = t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicPartition {
    points: Vec<f64>,
    order: u32,
    control_tag: String,
}

impl DyadicPartition {
    /// `{s, t}`.
    pub fn trivial(omega: &Control, s: f64, t: f64) -> Result<Self> {
        if !(s < t) {
            return Err(Error::InvalidInput(format!("partition needs s < t, got [{s}, {t}]")));
        }
        Ok(DyadicPartition {
            points: vec![s, t],
            order: 0,
            control_tag: omega.description().to_string(),
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn control_tag(&self) -> &str {
        &self.control_tag
    }

    pub fn start(&self) -> f64 {
        self.points[0]
    }

    pub fn end(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// Consecutive pieces `(u_{j-1}, u_j)`.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    /// `P_{K+1}`: one balance point inserted between every consecutive pair.
    pub fn refine(&self, omega: &Control, tol: f64) -> Result<Self> {
        self.refine_with(omega, tol, Bracketing::Upper)
    }

    pub fn refine_with(&self, omega: &Control, tol: f64, bracketing: Bracketing) -> Result<Self> {
        let mut points = Vec::with_capacity(2 * self.points.len() - 1);
        points.push(self.points[0]);
        for (a, b) in self.intervals() {
            let mid = balance_point_with(omega, a, b, tol, bracketing)?;
            if !(a < mid && mid < b) {
                return Err(Error::InvalidInput(format!(
                    "balance point of [{a}, {b}] is not interior; the partition is finer than float resolution"
                )));
            }
            points.push(mid);
            points.push(b);
        }
        Ok(DyadicPartition {
            points,
            order: self.order + 1,
            control_tag: self.control_tag.clone(),
        })
    }

    /// The stride-`2^m` subpartition `P_{K-m}`.
    pub fn coarsen(&self, m: u32) -> Option<Self> {
        if m > self.order {
            return None;
        }
        let stride = 1usize << m;
        Some(DyadicPartition {
            points: self.points.iter().step_by(stride).copied().collect(),
            order: self.order - m,
            control_tag: self.control_tag.clone(),
        })
    }

    /// Balance residuals of every coarsening and the halving ratio.
    pub fn audit(&self, omega: &Control) -> PartitionAudit {
        let total = omega.eval(self.start(), self.end());
        let mut max_residual: f64 = 0.0;
        for m in 0..self.order {
            let coarse = self.coarsen(m).unwrap();
            for w in coarse.points.windows(3).step_by(2) {
                let r = (omega.eval(w[0], w[1]) - omega.eval(w[1], w[2])).abs();
                max_residual = max_residual.max(if total > 0.0 { r / total } else { r });
            }
        }
        let max_piece = self.intervals().map(|(a, b)| omega.eval(a, b)).fold(0.0, f64::max);
        let halving_ratio = if total > 0.0 {
            max_piece * (1u64 << self.order) as f64 / total
        } else {
            0.0
        };
        PartitionAudit {
            max_relative_residual: max_residual,
            max_piece_control: max_piece,
            halving_ratio,
        }
    }
}

/// Result of [`DyadicPartition::audit`]. `halving_ratio` is
/// `max_j ω(u_{j-1}, u_j) · 2^K / ω(s, t)`, at most `1 + tol` for a valid
/// partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionAudit {
    pub max_relative_residual: f64,
    pub max_piece_control: f64,
    pub halving_ratio: f64,
}

/// The total `K`-dyadic partition of `[s, t]`, by `K` rounds of midpoint
/// insertion.
pub fn total_dyadic_partition(omega: &Control, s: f64, t: f64, order: u32, tol: f64) -> Result<DyadicPartition> {
    let mut partition = DyadicPartition::trivial(omega, s, t)?;
    for _ in 0..order {
        partition = partition.refine(omega, tol)?;
    }
    Ok(partition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::PiecewiseLinearPath;
    use std::sync::Arc;

    fn linear() -> Control {
        Control::new("t - s", |s, t| t - s)
    }

    #[test]
    fn symmetric_control_balances_at_midpoint() {
        let u = balance_point(&linear(), 0.0, 1.0, 1e-12).unwrap();
        assert!((u - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quadratic_control() {
        let omega = Control::new("t^2 - s^2", |s, t| t * t - s * s);
        let u = balance_point(&omega, 0.0, 1.0, 1e-12).unwrap();
        assert!((u - 0.5f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn two_segment_path_balances_between_legs() {
        let path = Arc::new(
            PiecewiseLinearPath::new(vec![0.0, 0.5, 1.0], vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap(),
        );
        let omega = Control::arc_length(&[path], 1.0);
        let u = balance_point(&omega, 0.0, 1.0, 1e-12).unwrap();
        assert!((u - 0.5).abs() < 1e-12);
    }

    #[test]
    fn uniform_partition() {
        let p = total_dyadic_partition(&linear(), 0.0, 1.0, 2, 1e-12).unwrap();
        let expected = [0.0, 0.25, 0.5, 0.75, 1.0];
        assert_eq!(p.points().len(), 5);
        for (a, b) in p.points().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let p0 = total_dyadic_partition(&linear(), 0.2, 0.7, 0, 1e-12).unwrap();
        assert_eq!(p0.points(), &[0.2, 0.7]);
    }

    #[test]
    fn degenerate_control_returns_midpoint() {
        let zero = Control::new("0", |_, _| 0.0);
        assert_eq!(balance_point(&zero, 0.2, 0.6, 1e-12).unwrap(), 0.4);
    }

    #[test]
    fn sign_errors_name_the_interval() {
        let backwards = Control::new("s - t", |s, t| s - t + 1.0);
        let err = balance_point(&backwards, 0.25, 0.75, 1e-12).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("0.25") && msg.contains("0.75"), "{msg}");
        assert!(balance_point(&linear(), 0.5, 0.5, 1e-12).is_err());
    }

    #[test]
    fn flat_controls_are_rejected() {
        let flat = Control::new("flat", |s, t| t - s).non_strict();
        assert!(matches!(
            balance_point(&flat, 0.0, 1.0, 1e-12),
            Err(Error::NonMonotoneControl { .. })
        ));
    }

    #[test]
    fn bracketing_orders_agree() {
        let omega = Control::new("cubic", |s: f64, t: f64| t.powi(3) - s.powi(3) + 0.1 * (t - s));
        let a = total_dyadic_partition(&omega, 0.0, 1.0, 5, 1e-12).unwrap();
        let mut b = DyadicPartition::trivial(&omega, 0.0, 1.0).unwrap();
        for _ in 0..5 {
            b = b.refine_with(&omega, 1e-12, Bracketing::Lower).unwrap();
        }
        for (x, y) in a.points().iter().zip(b.points()) {
            assert!((x - y).abs() <= 2e-12);
        }
    }

    #[test]
    fn coarsening_recovers_previous_orders() {
        let omega = Control::new("t^2 - s^2", |s, t| t * t - s * s);
        let p3 = total_dyadic_partition(&omega, 0.0, 1.0, 3, 1e-12).unwrap();
        let p4 = p3.refine(&omega, 1e-12).unwrap();
        assert_eq!(p4.coarsen(1).unwrap(), p3);
        assert_eq!(p4.coarsen(4).unwrap().points(), &[0.0, 1.0]);
        assert!(p4.coarsen(5).is_none());
        let audit = p4.audit(&omega);
        assert!(audit.max_relative_residual < 1e-11);
        assert!(audit.halving_ratio <= 1.0 + 1e-11);
    }
}
