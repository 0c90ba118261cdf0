//! Piecewise-linear paths, their signatures on arbitrary subintervals,
//! arc-length controls and controlled multiplicative functionals.

use std::fmt;
use std::sync::Arc;

use crate::bounds::frac_factorial;
use crate::error::{Error, Result};
use crate::sampling::simplex_pairs;
use crate::tensor::TruncatedTensor;

/// Seed for the sampled pairs used by [`calibrated_control`].
pub const CALIBRATION_SEED: u64 = 0x5eed_ca1b;

/// Inflation applied to the smallest admissible control scale.
pub const CALIBRATION_INFLATION: f64 = 1.01;

/// A path `[0, 1] -> R^d`, linear between consecutive samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearPath {
    dim: usize,
    times: Vec<f64>,
    points: Vec<Vec<f64>>,
    /// Arc length from 0 to `times[i]`.
    cumulative: Vec<f64>,
}

impl PiecewiseLinearPath {
    pub fn new(times: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidInput("a path needs at least 2 samples".into()));
        }
        if times.len() != points.len() {
            return Err(Error::InvalidInput(format!(
                "{} times but {} points",
                times.len(),
                points.len()
            )));
        }
        if times[0] != 0.0 || *times.last().unwrap() != 1.0 {
            return Err(Error::InvalidInput(format!(
                "times must start at 0 and end at 1, got [{}, {}]",
                times[0],
                times.last().unwrap()
            )));
        }
        if let Some(w) = times.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput(format!(
                "times must be strictly increasing (index {})",
                w + 1
            )));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::InvalidInput("points must have at least one coordinate".into()));
        }
        if let Some(i) = points.iter().position(|p| p.len() != dim) {
            return Err(Error::InvalidInput(format!(
                "point {i} has {} coordinates, expected {dim}",
                points[i].len()
            )));
        }
        if points.iter().flatten().chain(&times).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample".into()));
        }
        let mut cumulative = Vec::with_capacity(times.len());
        cumulative.push(0.0);
        for w in points.windows(2) {
            let last = *cumulative.last().unwrap();
            cumulative.push(last + euclid_dist(&w[0], &w[1]));
        }
        Ok(PiecewiseLinearPath {
            dim,
            times,
            points,
            cumulative,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn num_segments(&self) -> usize {
        self.times.len() - 1
    }

    pub fn total_length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Segment `i` with `times[i] <= t <= times[i + 1]`.
    fn locate(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&x| x <= t);
        i.saturating_sub(1).min(self.num_segments() - 1)
    }

    fn velocity(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        let dt = self.times[i + 1] - self.times[i];
        self.points[i + 1]
            .iter()
            .zip(&self.points[i])
            .map(move |(b, a)| (b - a) / dt)
    }

    fn speed(&self, i: usize) -> f64 {
        (self.cumulative[i + 1] - self.cumulative[i]) / (self.times[i + 1] - self.times[i])
    }

    pub fn value_at(&self, t: f64) -> Vec<f64> {
        let i = self.locate(t);
        let dt = t - self.times[i];
        self.points[i]
            .iter()
            .zip(self.velocity(i))
            .map(|(x, v)| x + v * dt)
            .collect()
    }

    /// Indices of segments along which the path does not move.
    pub fn stationary_segments(&self) -> Vec<usize> {
        (0..self.num_segments())
            .filter(|&i| self.cumulative[i + 1] == self.cumulative[i])
            .collect()
    }

    fn check_interval(&self, s: f64, t: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidInput(format!("[{s}, {t}] is not inside [0, 1]")));
        }
        if s > t {
            return Err(Error::InvalidInput(format!("interval [{s}, {t}] has s > t")));
        }
        Ok(())
    }

    /// Iterated integrals of the path on `[s, t]` up to `depth`, by Chen
    /// concatenation of the (partial) segments meeting the interval.
    pub fn signature(&self, s: f64, t: f64, depth: usize) -> Result<TruncatedTensor> {
        let mut sig = TruncatedTensor::identity(self.dim, depth);
        self.signature_into(s, t, &mut sig)?;
        Ok(sig)
    }

    /// [`Self::signature`] written into `sig`, at the depth of `sig`.
    pub fn signature_into(&self, s: f64, t: f64, sig: &mut TruncatedTensor) -> Result<()> {
        self.check_interval(s, t)?;
        if sig.dim() != self.dim {
            return Err(Error::Shape(format!("buffer dimension {} differs from path dimension {}", sig.dim(), self.dim)));
        }
        sig.set_identity();
        if s == t || sig.depth() == 0 {
            return Ok(());
        }
        let first = self.locate(s);
        let last = self.locate(t);
        let mut inc = vec![0.0; self.dim];
        for i in first..=last {
            let a = s.max(self.times[i]);
            let b = t.min(self.times[i + 1]);
            if b <= a {
                continue;
            }
            if a == self.times[i] && b == self.times[i + 1] {
                for (x, (p1, p0)) in inc.iter_mut().zip(self.points[i + 1].iter().zip(&self.points[i])) {
                    *x = p1 - p0;
                }
            } else {
                for (x, v) in inc.iter_mut().zip(self.velocity(i)) {
                    *x = v * (b - a);
                }
            }
            sig.mul_exp_assign(&inc)?;
        }
        Ok(())
    }

    /// Euclidean arc length of the path restricted to `[s, t]`.
    pub fn one_variation(&self, s: f64, t: f64) -> Result<f64> {
        self.check_interval(s, t)?;
        Ok(self.length_unchecked(s, t))
    }

    fn length_unchecked(&self, s: f64, t: f64) -> f64 {
        if s >= t {
            return 0.0;
        }
        let i = self.locate(s);
        let j = self.locate(t);
        if i == j {
            return self.speed(i) * (t - s);
        }
        let head = self.speed(i) * (self.times[i + 1] - s);
        let middle = self.cumulative[j] - self.cumulative[i + 1];
        let tail = self.speed(j) * (t - self.times[j]);
        head + middle + tail
    }
}

fn euclid_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

type ControlFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A control `ω(s, t) >= 0` on `0 <= s <= t <= 1`.
#[derive(Clone)]
pub struct Control {
    eval: Arc<ControlFn>,
    description: String,
    strictly_monotone: bool,
    profile: Option<Arc<SpeedProfile>>,
}

/// Piecewise-constant speed of an additive control `ω(s, t) = ∫_s^t v`.
#[derive(Debug)]
struct SpeedProfile {
    knots: Vec<f64>,
    speeds: Vec<f64>,
}

impl SpeedProfile {
    /// `u` with `∫_s^u v = half`, walking the knots from `s`.
    fn solve(&self, s: f64, t: f64, half: f64) -> Option<f64> {
        let mut i = self.knots.partition_point(|&x| x <= s).checked_sub(1)?;
        let mut pos = s;
        let mut acc = 0.0;
        while i < self.speeds.len() && pos < t {
            let end = self.knots[i + 1].min(t);
            let piece = self.speeds[i] * (end - pos);
            if acc + piece >= half && self.speeds[i] > 0.0 {
                return Some((pos + (half - acc) / self.speeds[i]).clamp(pos, end));
            }
            acc += piece;
            pos = end;
            i += 1;
        }
        None
    }
}

impl fmt::Debug for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Control")
            .field("description", &self.description)
            .field("strictly_monotone", &self.strictly_monotone)
            .finish()
    }
}

impl Control {
    /// A control from a closure the caller asserts to be continuous,
    /// superadditive and strictly monotone.
    pub fn new(description: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Control {
            eval: Arc::new(f),
            description: description.into(),
            strictly_monotone: true,
            profile: None,
        }
    }

    /// Mark the control as flat somewhere, which makes balance points
    /// non-unique.
    pub fn non_strict(mut self) -> Self {
        self.strictly_monotone = false;
        self
    }

    /// `scale * sum_i length(paths[i]; s, t)`; additive, hence superadditive.
    pub fn arc_length(paths: &[Arc<PiecewiseLinearPath>], scale: f64) -> Self {
        let strict = jointly_moving(paths);
        let owned: Vec<Arc<PiecewiseLinearPath>> = paths.to_vec();
        let mut ctl = Control::new(
            format!("{scale:e} x arc length of {} path(s)", paths.len()),
            move |s, t| scale * owned.iter().map(|p| p.length_unchecked(s, t)).sum::<f64>(),
        );
        if !strict {
            ctl.description.push_str(" (not strictly monotone: the paths pause)");
            ctl.strictly_monotone = false;
        }
        let mut knots: Vec<f64> = paths.iter().flat_map(|p| p.times().iter().copied()).collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let speeds = knots
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                scale * paths.iter().map(|p| p.speed(p.locate(mid))).sum::<f64>()
            })
            .collect();
        ctl.profile = Some(Arc::new(SpeedProfile { knots, speeds }));
        ctl
    }

    /// The balance point of `[s, t]` in closed form, for controls that are
    /// integrals of a piecewise-constant speed.
    pub fn exact_balance_point(&self, s: f64, t: f64) -> Option<f64> {
        let profile = self.profile.as_ref()?;
        profile.solve(s, t, 0.5 * self.eval(s, t))
    }

    #[inline]
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        (self.eval)(s, t)
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn is_strictly_monotone(&self) -> bool {
        self.strictly_monotone
    }

    /// Diagonal and superadditivity audit over sampled triples.
    pub fn audit(&self, triples: &[(f64, f64, f64)]) -> ControlAudit {
        let mut audit = ControlAudit::default();
        for &(s, u, t) in triples {
            for x in [s, u, t] {
                audit.max_diagonal = audit.max_diagonal.max(self.eval(x, x).abs());
            }
            let whole = self.eval(s, t);
            let excess = self.eval(s, u) + self.eval(u, t) - whole;
            let rel = excess / whole.abs().max(f64::MIN_POSITIVE);
            audit.max_superadditivity_excess = audit.max_superadditivity_excess.max(rel);
        }
        audit
    }
}

/// Result of [`Control::audit`]. The excess is relative to `ω(s, t)`;
/// positive values are violations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ControlAudit {
    pub max_diagonal: f64,
    pub max_superadditivity_excess: f64,
}

impl ControlAudit {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_diagonal == 0.0 && self.max_superadditivity_excess <= tol
    }
}

/// True when on every stretch of time at least one path moves.
fn jointly_moving(paths: &[Arc<PiecewiseLinearPath>]) -> bool {
    let mut grid: Vec<f64> = paths.iter().flat_map(|p| p.times().iter().copied()).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid.windows(2).all(|w| {
        let mid = 0.5 * (w[0] + w[1]);
        paths.iter().any(|p| p.speed(p.locate(mid)) > 0.0)
    })
}

/// A two-parameter tensor-valued map satisfying Chen's identity.
pub trait MultiplicativeFunctional: Send + Sync {
    fn dim(&self) -> usize;

    /// Highest level this functional can produce.
    fn native_depth(&self) -> usize;

    fn evaluate(&self, s: f64, t: f64, depth: usize) -> Result<TruncatedTensor>;

    /// [`Self::evaluate`] at the depth of `out`, reusing its storage.
    fn evaluate_into(&self, s: f64, t: f64, out: &mut TruncatedTensor) -> Result<()> {
        *out = self.evaluate(s, t, out.depth())?;
        Ok(())
    }
}

/// Signature of a path, restricted to levels `0..=depth`.
#[derive(Debug, Clone)]
pub struct PathFunctional {
    path: Arc<PiecewiseLinearPath>,
    depth: usize,
}

impl PathFunctional {
    pub fn new(path: Arc<PiecewiseLinearPath>, depth: usize) -> Self {
        PathFunctional { path, depth }
    }

    pub fn path(&self) -> &Arc<PiecewiseLinearPath> {
        &self.path
    }
}

impl MultiplicativeFunctional for PathFunctional {
    fn dim(&self) -> usize {
        self.path.dim()
    }

    fn native_depth(&self) -> usize {
        self.depth
    }

    fn evaluate(&self, s: f64, t: f64, depth: usize) -> Result<TruncatedTensor> {
        if depth > self.depth {
            return Err(Error::InvalidInput(format!(
                "functional carries levels up to {}, requested {depth}",
                self.depth
            )));
        }
        self.path.signature(s, t, depth)
    }

    fn evaluate_into(&self, s: f64, t: f64, out: &mut TruncatedTensor) -> Result<()> {
        if out.depth() > self.depth {
            return Err(Error::InvalidInput(format!(
                "functional carries levels up to {}, requested {}",
                self.depth,
                out.depth()
            )));
        }
        self.path.signature_into(s, t, out)
    }
}

/// A multiplicative functional with finite `p`-variation controlled by `ω`
/// with constant `β`.
#[derive(Clone)]
pub struct ControlledFunctional {
    inner: Arc<dyn MultiplicativeFunctional>,
    p: f64,
    beta: f64,
    control: Control,
}

impl fmt::Debug for ControlledFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlledFunctional")
            .field("p", &self.p)
            .field("beta", &self.beta)
            .field("native_depth", &self.inner.native_depth())
            .field("control", &self.control)
            .finish()
    }
}

impl ControlledFunctional {
    pub fn new(inner: Arc<dyn MultiplicativeFunctional>, p: f64, beta: f64, control: Control) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidInput(format!("p must be >= 1, got {p}")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidInput(format!("beta must be > 0, got {beta}")));
        }
        let floor = p.floor() as usize;
        if inner.native_depth() < floor {
            return Err(Error::InvalidInput(format!(
                "a {p}-rough functional needs {floor} levels, this one has {}",
                inner.native_depth()
            )));
        }
        Ok(ControlledFunctional {
            inner,
            p,
            beta,
            control,
        })
    }

    /// The level-`⌊p⌋` signature data of `path`.
    pub fn from_path(path: Arc<PiecewiseLinearPath>, p: f64, beta: f64, control: Control) -> Result<Self> {
        let depth = p.floor() as usize;
        Self::new(Arc::new(PathFunctional::new(path, depth)), p, beta, control)
    }

    pub fn evaluate(&self, s: f64, t: f64, depth: usize) -> Result<TruncatedTensor> {
        self.inner.evaluate(s, t, depth)
    }

    pub fn evaluate_into(&self, s: f64, t: f64, out: &mut TruncatedTensor) -> Result<()> {
        self.inner.evaluate_into(s, t, out)
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn native_depth(&self) -> usize {
        self.inner.native_depth()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn floor_p(&self) -> usize {
        self.p.floor() as usize
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn control(&self) -> &Control {
        &self.control
    }

    pub fn inner(&self) -> &Arc<dyn MultiplicativeFunctional> {
        &self.inner
    }

    /// `ω(s,t)^(n/p) / (β (n/p)!)`.
    pub fn variation_bound(&self, omega: f64, n: usize) -> f64 {
        let e = n as f64 / self.p;
        omega.powf(e) / (self.beta * frac_factorial(e))
    }

    /// Largest coefficient error of `X(s,u) ⊗ X(u,t)` against `X(s,t)`.
    pub fn chen_defect(&self, s: f64, u: f64, t: f64, depth: usize) -> Result<f64> {
        let left = self.evaluate(s, u, depth)?;
        let right = self.evaluate(u, t, depth)?;
        let whole = self.evaluate(s, t, depth)?;
        left.product(&right)?.max_abs_diff(&whole)
    }

    /// Worst ratio `‖X^n(s,t)‖ / bound` over the pairs and levels `1..=levels`.
    pub fn variation_audit(&self, pairs: &[(f64, f64)], levels: usize) -> Result<VariationAudit> {
        let mut audit = VariationAudit::default();
        for &(s, t) in pairs {
            let x = self.evaluate(s, t, levels)?;
            let omega = self.control.eval(s, t);
            for n in 1..=levels {
                let norm = x.level_norm(n);
                let bound = self.variation_bound(omega, n);
                let ratio = if norm == 0.0 { 0.0 } else { norm / bound };
                if ratio > audit.worst_ratio {
                    audit = VariationAudit {
                        worst_ratio: ratio,
                        worst_pair: (s, t),
                        worst_level: n,
                    };
                }
            }
        }
        Ok(audit)
    }
}

/// Result of [`ControlledFunctional::variation_audit`]; the bound holds on
/// the sample iff `worst_ratio <= 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VariationAudit {
    pub worst_ratio: f64,
    pub worst_pair: (f64, f64),
    pub worst_level: usize,
}

/// A scaled arc-length control together with its scale.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub control: Control,
    pub scale: f64,
    /// Smallest admissible scale before inflation.
    pub minimal_scale: f64,
}

/// `ω = λ · length`, with `λ` the smallest scale for which
/// `‖X^n(s,t)‖ <= ω(s,t)^(n/p) / (β (n/p)!)` holds on `(0, 1)` and
/// `sample_pairs` sampled pairs for `n = 1..=depth`, inflated by 1.01.
pub fn calibrated_control(
    path: &Arc<PiecewiseLinearPath>,
    p: f64,
    beta: f64,
    depth: usize,
    sample_pairs: usize,
) -> Result<Calibration> {
    calibrated_joint_control(std::slice::from_ref(path), p, beta, depth, sample_pairs, CALIBRATION_SEED)
}

/// One control for several paths at once: `ω = λ · Σ_i length_i`.
///
/// Each sampled condition is monotone in `λ`, so the smallest admissible
/// scale is the largest per-sample threshold
/// `(β (n/p)! ‖X^n‖)^(p/n) / Σ length`.
pub fn calibrated_joint_control(
    paths: &[Arc<PiecewiseLinearPath>],
    p: f64,
    beta: f64,
    depth: usize,
    sample_pairs: usize,
    seed: u64,
) -> Result<Calibration> {
    if !(p >= 1.0) {
        return Err(Error::InvalidInput(format!("p must be >= 1, got {p}")));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidInput(format!("beta must be > 0, got {beta}")));
    }
    if paths.is_empty() {
        return Err(Error::InvalidInput("no paths to calibrate against".into()));
    }
    let unit = Control::arc_length(paths, 1.0);
    let mut pairs = vec![(0.0, 1.0)];
    pairs.extend(simplex_pairs(sample_pairs, seed));
    let mut minimal: f64 = 0.0;
    for &(s, t) in &pairs {
        let length = unit.eval(s, t);
        if length <= 0.0 {
            continue;
        }
        for path in paths {
            let sig = path.signature(s, t, depth)?;
            for n in 1..=depth {
                let e = n as f64 / p;
                let norm = sig.level_norm(n);
                if norm > 0.0 {
                    let needed = (beta * frac_factorial(e) * norm).powf(1.0 / e) / length;
                    minimal = minimal.max(needed);
                }
            }
        }
    }
    if minimal == 0.0 {
        minimal = 1.0;
    }
    let scale = CALIBRATION_INFLATION * minimal;
    Ok(Calibration {
        control: Control::arc_length(paths, scale),
        scale,
        minimal_scale: minimal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::simplex_triples;
    use crate::tensor::segment_signature;

    fn two_segment() -> Arc<PiecewiseLinearPath> {
        Arc::new(
            PiecewiseLinearPath::new(
                vec![0.0, 0.5, 1.0],
                vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            )
            .unwrap(),
        )
    }

    #[test]
    fn construction_rejects_bad_samples() {
        let p = |t: Vec<f64>, x: Vec<Vec<f64>>| PiecewiseLinearPath::new(t, x);
        assert!(p(vec![0.0], vec![vec![0.0]]).is_err());
        assert!(p(vec![0.0, 0.9], vec![vec![0.0], vec![1.0]]).is_err());
        assert!(p(vec![0.1, 1.0], vec![vec![0.0], vec![1.0]]).is_err());
        assert!(p(vec![0.0, 0.5, 0.5, 1.0], vec![vec![0.0]; 4]).is_err());
        assert!(p(vec![0.0, 1.0], vec![vec![0.0], vec![1.0, 2.0]]).is_err());
        assert!(p(vec![0.0, 1.0], vec![vec![0.0]]).is_err());
        assert!(p(vec![0.0, 1.0], vec![vec![0.0], vec![f64::NAN]]).is_err());
    }

    #[test]
    fn two_segment_signature() {
        let sig = two_segment().signature(0.0, 1.0, 2).unwrap();
        assert_eq!(sig.level(1), &[1.0, 1.0]);
        assert_eq!(sig.level(2), &[0.5, 1.0, 0.0, 0.5]);
    }

    #[test]
    fn single_segment_is_segment_signature() {
        let path = PiecewiseLinearPath::new(vec![0.0, 1.0], vec![vec![0.2, 0.1], vec![0.5, -0.6]]).unwrap();
        let sig = path.signature(0.0, 1.0, 5).unwrap();
        let direct = segment_signature(&[0.3, -0.7], 5);
        assert!(sig.max_abs_diff(&direct).unwrap() < 1e-15);
    }

    #[test]
    fn degenerate_and_reversed_intervals() {
        let path = two_segment();
        assert_eq!(path.signature(0.3, 0.3, 4).unwrap(), TruncatedTensor::identity(2, 4));
        assert!(path.signature(0.6, 0.2, 2).is_err());
        assert!(path.signature(-0.1, 0.2, 2).is_err());
        assert_eq!(path.one_variation(0.4, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn partial_segments_use_the_interpolant() {
        let path = two_segment();
        let sig = path.signature(0.25, 0.75, 1).unwrap();
        assert!((sig.level(1)[0] - 0.5).abs() < 1e-15);
        assert!((sig.level(1)[1] - 0.5).abs() < 1e-15);
        assert_eq!(path.value_at(0.75), vec![1.0, 0.5]);
    }

    #[test]
    fn pythagorean_length() {
        let path = PiecewiseLinearPath::new(vec![0.0, 1.0], vec![vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(path.one_variation(0.0, 1.0).unwrap(), 5.0);
        assert!((path.one_variation(0.2, 0.6).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn arc_length_control_is_additive() {
        let path = two_segment();
        let ctl = Control::arc_length(&[path], 2.0);
        let triples = simplex_triples(1000, 1);
        let audit = ctl.audit(&triples);
        assert!(audit.passes(1e-12), "{audit:?}");
        assert!(ctl.is_strictly_monotone());
    }

    #[test]
    fn pausing_paths_are_flagged() {
        let path = Arc::new(
            PiecewiseLinearPath::new(
                vec![0.0, 0.4, 0.6, 1.0],
                vec![vec![0.0], vec![1.0], vec![1.0], vec![2.0]],
            )
            .unwrap(),
        );
        assert_eq!(path.stationary_segments(), vec![1]);
        let ctl = Control::arc_length(std::slice::from_ref(&path), 1.0);
        assert!(!ctl.is_strictly_monotone());
        assert!(ctl.description().contains("pause"));
        let mover = Arc::new(PiecewiseLinearPath::new(vec![0.0, 1.0], vec![vec![0.0], vec![1.0]]).unwrap());
        assert!(Control::arc_length(&[path, mover], 1.0).is_strictly_monotone());
    }

    #[test]
    fn unit_speed_line_at_p_one_needs_scale_beta() {
        let line = Arc::new(PiecewiseLinearPath::new(vec![0.0, 1.0], vec![vec![0.0], vec![1.0]]).unwrap());
        let cal = calibrated_control(&line, 1.0, 1.0, 1, 200).unwrap();
        assert!((cal.minimal_scale - 1.0).abs() < 1e-12);
        let cal = calibrated_control(&two_segment(), 1.0, 3.0, 1, 200).unwrap();
        assert!(cal.minimal_scale <= 3.0 + 1e-12);
        let x = ControlledFunctional::from_path(two_segment(), 1.0, 3.0, Control::arc_length(&[two_segment()], 3.0)).unwrap();
        let audit = x.variation_audit(&simplex_pairs(300, 9), 1).unwrap();
        assert!(audit.worst_ratio <= 1.0 + 1e-12, "{audit:?}");
    }

    #[test]
    fn functional_depth_is_enforced() {
        let x = ControlledFunctional::from_path(two_segment(), 2.5, 1.0, Control::arc_length(&[two_segment()], 1.0)).unwrap();
        assert_eq!(x.native_depth(), 2);
        assert!(x.evaluate(0.0, 1.0, 3).is_err());
        assert!(ControlledFunctional::from_path(two_segment(), 0.5, 1.0, Control::new("c", |s, t| t - s)).is_err());
        assert!(ControlledFunctional::from_path(two_segment(), 1.0, 0.0, Control::new("c", |s, t| t - s)).is_err());
    }
}
