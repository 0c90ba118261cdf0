//! Fractional factorials, the neo-classical inequality, and the uniform
//! estimate for two functionals whose first `⌊p⌋` levels are close.
//!
//! With `{p} = p - ⌊p⌋`, a pair `(p, δ)` falls in one of three regimes:
//!
//! * `δ < 1 - {p}`: the closeness rate `ε` carries over to every level;
//! * `δ = 1 - {p}`: levels above `⌊p⌋` pick up a logarithmic correction;
//! * `δ > 1 - {p}` (non-integer `p` only): the rate degrades to
//!   `ε^((1 - {p}) / δ)`.
//!
//! `p = 1` is accepted and treated with the borderline formulas (`{p} = 0`,
//! `δ = 1`), the setting of two uniformly close bounded-variation paths.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::{extend_jointly, ExtensionConfig, HatSweep};
use crate::path::ControlledFunctional;
use crate::sampling::simplex_pairs;

/// Inflation applied to the measured closeness rate.
pub const EPSILON_INFLATION: f64 = 1.01;

/// Schema version of serialized reports.
pub const REPORT_SCHEMA: u32 = 1;

const CASE_TOL: f64 = 1e-12;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `x! = Γ(x + 1)` for `x >= 0`.
///
/// Integers up to 170 are multiplied out exactly; everything else goes
/// through the Lanczos approximation (`g = 7`, nine terms).
pub fn frac_factorial(x: f64) -> f64 {
    if x.is_nan() || x < 0.0 {
        return f64::NAN;
    }
    if x.fract() == 0.0 && x <= 170.0 {
        return (1..=x as u32).fold(1.0, |acc, k| acc * k as f64);
    }
    lanczos_gamma(x + 1.0)
}

fn lanczos_gamma(z: f64) -> f64 {
    if z < 0.5 {
        return std::f64::consts::PI / ((std::f64::consts::PI * z).sin() * lanczos_gamma(1.0 - z));
    }
    let z = z - 1.0;
    let mut sum = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    let w = z + LANCZOS_G + 0.5;
    // w^(z+1/2) e^(-w) split in two halves to stay finite near z = 170.
    let half = w.powf(0.5 * (z + 0.5));
    (2.0 * std::f64::consts::PI).sqrt() * half * (half * (-w).exp()) * sum
}

/// Both sides of
/// `(1/p) Σ_{k=0}^{n} x^(k/p)/(k/p)! · y^((n-k)/p)/((n-k)/p)! <= (x+y)^(n/p)/(n/p)!`.
pub fn neoclassical_sides(p: f64, x: f64, y: f64, n: u32) -> (f64, f64) {
    let term = |z: f64, k: u32| {
        let e = k as f64 / p;
        z.powf(e) / frac_factorial(e)
    };
    let lhs = (0..=n).map(|k| term(x, k) * term(y, n - k)).sum::<f64>() / p;
    let rhs = term(x + y, n);
    (lhs, rhs)
}

/// Regime of the uniform estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// `δ < 1 - {p}`
    Subcritical,
    /// `δ = 1 - {p}`
    Critical,
    /// `δ > 1 - {p}`
    Supercritical,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Case::Subcritical => "case1",
            Case::Critical => "case2",
            Case::Supercritical => "case3",
        };
        f.write_str(name)
    }
}

fn frac_part(p: f64) -> f64 {
    p - p.floor()
}

/// Classify `(p, δ)`; the supercritical regime needs non-integer `p`.
pub fn classify(p: f64, delta: f64) -> Result<Case> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidInput(format!("p must be >= 1, got {p}")));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidInput(format!("delta must lie in [0, 1], got {delta}")));
    }
    let border = 1.0 - frac_part(p);
    if (delta - border).abs() <= CASE_TOL {
        Ok(Case::Critical)
    } else if delta < border {
        Ok(Case::Subcritical)
    } else if frac_part(p) == 0.0 {
        Err(Error::InvalidCase(format!(
            "delta = {delta} > 1 - {{p}} needs non-integer p, got p = {p}"
        )))
    } else {
        Ok(Case::Supercritical)
    }
}

/// The strict lower bound on `β` for the regime of `(p, δ)`.
pub fn beta_threshold(p: f64, delta: f64) -> Result<f64> {
    let frac = frac_part(p);
    let half_pow = |e: f64| 0.5f64.powf(e);
    Ok(match classify(p, delta)? {
        Case::Subcritical => p / (1.0 - half_pow((1.0 - frac - delta) / p)),
        Case::Critical => {
            let e = (1.0 - frac) / p;
            4.0 * p * 2f64.powf(e) / (1.0 - half_pow(e))
        }
        Case::Supercritical => {
            let first = 2f64.powf((2.0 * p + delta) / p) / (1.0 - half_pow((delta - 1.0 + frac) / p));
            let second = 1.0 / (1.0 - half_pow((1.0 - frac) / p));
            2.0 * p * (first + second)
        }
    })
}

/// Parameters of one application of the uniform estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateParams {
    pub p: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub beta: f64,
    /// `ω(0, 1)`.
    pub omega_total: f64,
    /// Accept `β` at or below the regime threshold.
    #[serde(default)]
    pub allow_small_beta: bool,
    /// Accept `ε >= 1`.
    #[serde(default)]
    pub allow_large_epsilon: bool,
}

impl EstimateParams {
    pub fn new(p: f64, delta: f64, epsilon: f64, beta: f64, omega_total: f64) -> Self {
        EstimateParams {
            p,
            delta,
            epsilon,
            beta,
            omega_total,
            allow_small_beta: false,
            allow_large_epsilon: false,
        }
    }

    pub fn case(&self) -> Result<Case> {
        classify(self.p, self.delta)
    }

    pub fn floor_p(&self) -> usize {
        self.p.floor() as usize
    }

    pub fn frac_p(&self) -> f64 {
        frac_part(self.p)
    }

    pub fn beta_threshold(&self) -> Result<f64> {
        beta_threshold(self.p, self.delta)
    }

    pub fn beta_ok(&self) -> Result<bool> {
        Ok(self.beta > self.beta_threshold()?)
    }

    pub fn epsilon_ok(&self) -> bool {
        self.epsilon >= 0.0 && self.epsilon < 1.0
    }

    /// Check the regime, `β` and `ε` unless overridden.
    pub fn validate(&self) -> Result<Case> {
        let case = self.case()?;
        if !(self.beta > 0.0) {
            return Err(Error::InvalidInput(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.omega_total >= 0.0) {
            return Err(Error::InvalidInput(format!("omega(0,1) must be >= 0, got {}", self.omega_total)));
        }
        if !self.allow_small_beta && !self.beta_ok()? {
            return Err(Error::Precondition(format!(
                "beta = {} does not exceed the {case} threshold {}",
                self.beta,
                self.beta_threshold()?
            )));
        }
        if !self.allow_large_epsilon && !self.epsilon_ok() {
            return Err(Error::Precondition(format!("epsilon = {} is not in [0, 1)", self.epsilon)));
        }
        Ok(case)
    }

    /// `ε ω^((k-δ)/p) / (β (k/p)!)`, the closeness assumed on levels `<= ⌊p⌋`.
    pub fn hypothesis_bound(&self, omega_st: f64, k: usize) -> f64 {
        let kp = k as f64 / self.p;
        self.epsilon * omega_st.powf((k as f64 - self.delta) / self.p) / (self.beta * frac_factorial(kp))
    }

    /// Logarithmic factor `1 + p/(1-{p}) + log2(ω(0,1) / ε^((1-{p})/p))` of
    /// the borderline regime.
    pub fn critical_log_factor(&self) -> f64 {
        let frac = self.frac_p();
        1.0 + self.p / (1.0 - frac) + (self.omega_total / self.epsilon.powf((1.0 - frac) / self.p)).log2()
    }
}

/// Right-hand side of the uniform estimate at level `k` on an interval with
/// control `omega_st`. Levels `<= ⌊p⌋` return the hypothesis bound.
pub fn theorem_rhs(params: &EstimateParams, omega_st: f64, k: usize) -> Result<f64> {
    let case = params.case()?;
    if params.epsilon == 0.0 {
        // Every regime's bound vanishes as ε -> 0.
        return Ok(0.0);
    }
    if k <= params.floor_p() || case == Case::Subcritical {
        return Ok(params.hypothesis_bound(omega_st, k));
    }
    let p = params.p;
    let frac = params.frac_p();
    let denom = params.beta * frac_factorial(k as f64 / p);
    Ok(match case {
        Case::Critical => {
            params.epsilon * params.critical_log_factor() * omega_st.powf((k as f64 - 1.0 + frac) / p) / denom
        }
        Case::Supercritical => {
            params.epsilon.powf((1.0 - frac) / params.delta) * omega_st.powf((k as f64 - 1.0 + params.delta) / p)
                / denom
        }
        Case::Subcritical => unreachable!(),
    })
}

/// The two terms whose minimum bounds a refinement increment of
/// `‖(X̂^{P_K} - Ŷ^{P_K})^{n+1}‖` from `P_K` to `P_{K+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaBound {
    /// Driven by the closeness rate `ε`.
    pub epsilon_term: f64,
    /// Driven by the partition mesh alone.
    pub partition_term: f64,
}

impl LemmaBound {
    pub fn value(&self) -> f64 {
        self.epsilon_term.min(self.partition_term)
    }
}

pub fn main_lemma_terms(params: &EstimateParams, omega_st: f64, n: usize, order: u32) -> LemmaBound {
    let p = params.p;
    let delta = params.delta;
    let m = (n + 1) as f64;
    let fact = frac_factorial(m / p);
    let beta2 = params.beta * params.beta;
    let mesh = 0.5f64.powi(order as i32);
    let epsilon_term = params.epsilon * p / (beta2 * fact)
        * 2f64.powf((2.0 * p + delta) / p)
        * mesh.powf((m - p - delta) / p)
        * omega_st.powf((m - delta) / p);
    let partition_term = mesh.powf(m / p - 1.0) * 2.0 * p * omega_st.powf(m / p) / (beta2 * fact);
    LemmaBound {
        epsilon_term,
        partition_term,
    }
}

/// `min{ε-term, partition-term}` for the refinement `P_K -> P_{K+1}`.
pub fn main_lemma_increment_bound(params: &EstimateParams, omega_st: f64, n: usize, order: u32) -> f64 {
    main_lemma_terms(params, omega_st, n, order).value()
}

/// The unique `N` with `(ω/2^N)^(δ/p) <= ε/2 < (ω/2^(N-1))^(δ/p)`.
pub fn dyadic_cutoff(params: &EstimateParams, omega_st: f64) -> Result<u32> {
    let (p, delta, eps) = (params.p, params.delta, params.epsilon);
    if !(delta > 0.0) {
        return Err(Error::Precondition("the cutoff index needs delta > 0".into()));
    }
    if !(eps > 0.0) || !(omega_st > 0.0) {
        return Err(Error::Precondition("the cutoff index needs epsilon > 0 and omega > 0".into()));
    }
    let threshold = 2.0 * omega_st.powf(delta / p);
    if eps >= threshold {
        return Err(Error::VacuousCutoff { epsilon: eps, threshold });
    }
    let below = |n: i64| (omega_st * 2f64.powi(-(n as i32))).powf(delta / p) <= eps / 2.0;
    let guess = (omega_st.log2() - (p / delta) * (eps / 2.0).log2()).ceil() as i64;
    let mut n = guess.max(1);
    while !below(n) {
        n += 1;
    }
    while n > 1 && below(n - 1) {
        n -= 1;
    }
    Ok(n as u32)
}

/// Smallest `ε` for which `‖X^k - Y^k‖ <= ε ω^((k-δ)/p) / (β (k/p)!)` holds
/// for `k = 1..=⌊p⌋` on `(0, 1)` and the pairs, inflated by 1.01.
///
/// `p`, `β` and `ω` are taken from `x`.
pub fn measure_epsilon(
    x: &ControlledFunctional,
    y: &ControlledFunctional,
    delta: f64,
    pairs: &[(f64, f64)],
) -> Result<f64> {
    check_shared(x, y)?;
    let levels = x.floor_p();
    let probe = EstimateParams::new(x.p(), delta, 1.0, x.beta(), 0.0);
    let mut worst: f64 = 0.0;
    for &(s, t) in std::iter::once(&(0.0, 1.0)).chain(pairs) {
        let omega = x.control().eval(s, t);
        let a = x.evaluate(s, t, levels)?;
        let b = y.evaluate(s, t, levels)?;
        for k in 1..=levels {
            let diff = a
                .level(k)
                .iter()
                .zip(b.level(k))
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt();
            if diff == 0.0 {
                continue;
            }
            let unit = probe.hypothesis_bound(omega, k);
            worst = worst.max(if unit > 0.0 { diff / unit } else { f64::INFINITY });
        }
    }
    Ok(EPSILON_INFLATION * worst)
}

fn check_shared(x: &ControlledFunctional, y: &ControlledFunctional) -> Result<()> {
    if x.p() != y.p() || x.beta() != y.beta() || x.dim() != y.dim() {
        return Err(Error::Precondition(
            "both functionals must share p, beta and dimension".into(),
        ));
    }
    Ok(())
}

/// One refinement of the main-lemma audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaAuditRow {
    pub order: u32,
    /// `‖(X̂^{P_K} - Ŷ^{P_K})^{n+1}‖`.
    pub distance: f64,
    /// Same quantity on `P_{K+1}`.
    pub next_distance: f64,
    /// Norm of the change of `(X̂ - Ŷ)^{n+1}` from `P_K` to `P_{K+1}`.
    pub increment: f64,
    pub bound: LemmaBound,
    pub pass: bool,
}

/// Measure the refinement increments of the level-`⌊p⌋+1` distance between
/// the hat products of `x` and `y` for `K = 0..=max_order` and compare them
/// with [`main_lemma_increment_bound`].
pub fn main_lemma_audit(
    x: &ControlledFunctional,
    y: &ControlledFunctional,
    params: &EstimateParams,
    s: f64,
    t: f64,
    max_order: u32,
) -> Result<Vec<LemmaAuditRow>> {
    check_shared(x, y)?;
    let n = x.floor_p();
    let fs = [x, y];
    let mut sweep = HatSweep::new(&fs, s, t, n, n + 1, crate::partition::DEFAULT_BALANCE_TOL)?;
    let omega = x.control().eval(s, t);
    let mut diffs: Vec<Vec<f64>> = Vec::with_capacity(max_order as usize + 2);
    for _ in 0..=max_order + 1 {
        let hats = sweep.advance()?;
        diffs.push(hats[0].sub(&hats[1])?.level(n + 1).to_vec());
    }
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    Ok((0..=max_order)
        .map(|k| {
            let (d0, d1) = (&diffs[k as usize], &diffs[k as usize + 1]);
            let increment = d0.iter().zip(d1).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
            let bound = main_lemma_terms(params, omega, n, k);
            LemmaAuditRow {
                order: k,
                distance: norm(d0),
                next_distance: norm(d1),
                increment,
                bound,
                pass: increment <= bound.value(),
            }
        })
        .collect())
}

/// One `(level, interval)` comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub level: usize,
    pub s: f64,
    pub t: f64,
    pub omega: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Per-level summary of an [`EstimateReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: usize,
    pub rows: usize,
    pub failures: usize,
    pub worst_slack: f64,
    /// Largest `lhs / rhs`.
    pub worst_ratio: f64,
}

/// Measured `‖X^k - Y^k‖` against the uniform-estimate bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub schema: u32,
    pub case: Case,
    pub params: EstimateParams,
    pub beta_threshold: f64,
    pub beta_ok: bool,
    pub epsilon_ok: bool,
    pub seed: u64,
    pub notes: Vec<String>,
    pub rows: Vec<EstimateRow>,
    pub summary: Vec<LevelSummary>,
}

impl EstimateReport {
    pub fn rows_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// Every row passes and the parameters meet the hypotheses.
    pub fn passed(&self) -> bool {
        self.rows_pass() && self.beta_ok && self.epsilon_ok
    }

    pub fn level(&self, k: usize) -> Option<&LevelSummary> {
        self.summary.iter().find(|s| s.level == k)
    }
}

/// Compare `‖X^k - Y^k‖` with [`theorem_rhs`] for `k = 1..=levels` on
/// `sample_pairs` deterministic pairs.
///
/// Levels above the functionals' native depth are computed with the Lyons
/// extension. A `β` at or below the regime threshold, or `ε >= 1`, is
/// flagged in the report rather than rejected; rows are emitted either way.
pub fn verify_uniform_estimate(
    x: &ControlledFunctional,
    y: &ControlledFunctional,
    params: &EstimateParams,
    levels: usize,
    sample_pairs: usize,
    seed: u64,
    extension: &ExtensionConfig,
) -> Result<EstimateReport> {
    check_shared(x, y)?;
    if (params.p - x.p()).abs() > 0.0 || (params.beta - x.beta()).abs() > 0.0 {
        return Err(Error::Precondition(
            "estimate parameters disagree with the functionals' p or beta".into(),
        ));
    }
    let case = params.case()?;
    let beta_threshold = params.beta_threshold()?;
    let beta_ok = params.beta > beta_threshold;
    let epsilon_ok = params.epsilon_ok();
    let mut notes = Vec::new();
    if params.p == 1.0 {
        notes.push("p = 1 handled with the borderline formulas at {p} = 0".to_string());
    }
    if case == Case::Supercritical {
        notes.push(
            "supercritical comparison constant read as 2^((3p+delta)/p) / (1 - (1/2)^((delta-1+{p})/p))".to_string(),
        );
    }
    if !beta_ok {
        notes.push(format!("beta = {} does not exceed the threshold {beta_threshold}", params.beta));
    }
    if !epsilon_ok {
        notes.push(format!("epsilon = {} violates epsilon < 1", params.epsilon));
    }

    let config = extension.clone().with_target(levels);
    let native = x.native_depth().min(y.native_depth());
    let mut rows = Vec::with_capacity(levels * sample_pairs);
    for (s, t) in simplex_pairs(sample_pairs, seed) {
        let (a, b) = if levels <= native {
            (x.evaluate(s, t, levels)?, y.evaluate(s, t, levels)?)
        } else {
            let joint = extend_jointly(&[x, y], s, t, &config)?;
            let mut it = joint.values.into_iter();
            (it.next().unwrap(), it.next().unwrap())
        };
        let diff = a.sub(&b)?;
        let omega = x.control().eval(s, t);
        for k in 1..=levels {
            let lhs = diff.level_norm(k);
            let rhs = theorem_rhs(params, omega, k)?;
            rows.push(EstimateRow {
                level: k,
                s,
                t,
                omega,
                lhs,
                rhs,
                slack: rhs - lhs,
                pass: lhs <= rhs,
            });
        }
    }
    rows.sort_by(|a, b| {
        a.level
            .cmp(&b.level)
            .then(a.s.total_cmp(&b.s))
            .then(a.t.total_cmp(&b.t))
    });
    let summary = (1..=levels)
        .map(|k| {
            let level_rows: Vec<&EstimateRow> = rows.iter().filter(|r| r.level == k).collect();
            LevelSummary {
                level: k,
                rows: level_rows.len(),
                failures: level_rows.iter().filter(|r| !r.pass).count(),
                worst_slack: level_rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min),
                worst_ratio: level_rows
                    .iter()
                    .map(|r| if r.lhs == 0.0 { 0.0 } else { r.lhs / r.rhs })
                    .fold(0.0, f64::max),
            }
        })
        .collect();
    Ok(EstimateReport {
        schema: REPORT_SCHEMA,
        case,
        params: params.clone(),
        beta_threshold,
        beta_ok,
        epsilon_ok,
        seed,
        notes,
        rows,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_factorials_are_exact() {
        assert_eq!(frac_factorial(0.0), 1.0);
        assert_eq!(frac_factorial(4.0), 24.0);
        assert_eq!(frac_factorial(10.0), 3_628_800.0);
    }

    #[test]
    fn half_integer_factorial() {
        let expected = std::f64::consts::PI.sqrt() / 2.0;
        assert!((frac_factorial(0.5) - expected).abs() / expected < 1e-14);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn factorial_against_high_precision_values() {
        // Γ(x + 1) to 20 digits.
        let cases = [
            (0.001, 0.999_423_772_484_595_465_5),
            (0.4, 0.887_263_817_503_075_289_2),
            (0.8, 0.931_383_770_980_242_698_9),
            (1.2, 1.101_802_490_879_712_732_8),
            (2.4, 2.981_206_426_810_332_971_8),
            (7.3, 9_281.392_525_746_537_693_3),
            (12.5, 1_710_542_068.319_573_215_7),
            (33.3, 2.493_363_339_642_061_300_5e37),
            (49.9, 2.054_887_506_092_275_962_9e64),
        ];
        for (x, expected) in cases {
            let rel = (frac_factorial(x) - expected).abs() / expected;
            assert!(rel < 1e-12, "x = {x}: relative error {rel:e}");
        }
    }

    #[test]
    fn neoclassical_is_binomial_at_p_one() {
        let (lhs, rhs) = neoclassical_sides(1.0, 2.0, 3.0, 4);
        assert!((rhs - 625.0 / 24.0).abs() < 1e-12);
        assert!((lhs - rhs).abs() / rhs < 1e-12);
    }

    #[test]
    fn neoclassical_single_term_when_x_vanishes() {
        for p in [1.0, 1.7, 3.2] {
            let (lhs, rhs) = neoclassical_sides(p, 0.0, 2.5, 5);
            assert!((lhs - rhs / p).abs() <= 1e-14 * rhs);
        }
    }

    #[test]
    fn classification() {
        assert_eq!(classify(2.0, 0.0).unwrap(), Case::Subcritical);
        assert_eq!(classify(2.0, 1.0).unwrap(), Case::Critical);
        assert_eq!(classify(1.0, 1.0).unwrap(), Case::Critical);
        assert_eq!(classify(2.5, 0.5).unwrap(), Case::Critical);
        assert_eq!(classify(2.5, 0.3).unwrap(), Case::Subcritical);
        assert_eq!(classify(2.5, 0.9).unwrap(), Case::Supercritical);
        assert!(classify(2.0, 1.2).is_err());
        assert!(classify(0.5, 0.2).is_err());
    }

    #[test]
    fn beta_thresholds() {
        let t1 = beta_threshold(2.0, 0.0).unwrap();
        assert!((t1 - 6.828_427_124_746_19).abs() < 1e-12);
        let t2 = beta_threshold(2.0, 1.0).unwrap();
        assert!((t2 - 38.627_416_997_969_52).abs() < 1e-10);
        assert!((beta_threshold(1.0, 1.0).unwrap() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn cutoff_examples() {
        let params = EstimateParams::new(1.0, 1.0, 0.5, 20.0, 1.0);
        assert_eq!(dyadic_cutoff(&params, 1.0).unwrap(), 2);
        let near = EstimateParams::new(1.0, 1.0, 2.0 * 0.999, 20.0, 1.0);
        assert_eq!(dyadic_cutoff(&near, 1.0).unwrap(), 1);
        let vacuous = EstimateParams::new(1.0, 1.0, 2.5, 20.0, 1.0);
        assert!(matches!(dyadic_cutoff(&vacuous, 1.0), Err(Error::VacuousCutoff { .. })));
        let no_delta = EstimateParams::new(2.0, 0.0, 0.5, 20.0, 1.0);
        assert!(dyadic_cutoff(&no_delta, 1.0).is_err());
    }

    #[test]
    fn rhs_is_zero_at_zero_control() {
        let params = EstimateParams::new(2.5, 0.9, 0.01, 300.0, 1.0);
        for k in 1..6 {
            assert_eq!(theorem_rhs(&params, 0.0, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn rhs_is_zero_at_zero_epsilon() {
        for (p, delta) in [(1.0, 1.0), (2.5, 0.3), (2.5, 0.9)] {
            let params = EstimateParams::new(p, delta, 0.0, 300.0, 4.0);
            for k in 1..6 {
                assert_eq!(theorem_rhs(&params, 2.0, k).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn critical_rhs_carries_the_log_factor() {
        let params = EstimateParams::new(1.0, 1.0, 1e-2, 17.0, 8.0);
        let rhs = theorem_rhs(&params, 2.0, 3).unwrap();
        let expected = 1e-2 * (1.0 + 1.0 / 1.0 + (8.0f64 / 1e-2).log2()) * 2f64.powi(2) / (17.0 * 6.0);
        assert!((rhs - expected).abs() <= 1e-14 * expected);
        // Hypothesis levels use the plain rate.
        let level1 = theorem_rhs(&params, 2.0, 1).unwrap();
        assert!((level1 - 1e-2 / 17.0).abs() < 1e-17);
    }

    #[test]
    fn supercritical_rhs_uses_the_degraded_rate() {
        let params = EstimateParams::new(2.5, 0.9, 1e-2, 300.0, 8.0);
        let rhs = theorem_rhs(&params, 2.0, 4).unwrap();
        let expected = 1e-2f64.powf(0.5 / 0.9) * 2f64.powf(3.9 / 2.5) / (300.0 * frac_factorial(1.6));
        assert!((rhs - expected).abs() <= 1e-14 * expected);
    }

    #[test]
    fn lemma_bound_vanishes_at_zero_control() {
        let params = EstimateParams::new(1.0, 1.0, 0.01, 17.0, 3.0);
        assert_eq!(main_lemma_increment_bound(&params, 0.0, 1, 3), 0.0);
    }

    #[test]
    fn validation_flags() {
        let mut params = EstimateParams::new(2.0, 0.0, 0.5, 5.0, 1.0);
        assert!(params.validate().is_err());
        params.allow_small_beta = true;
        assert_eq!(params.validate().unwrap(), Case::Subcritical);
        params.epsilon = 1.5;
        assert!(params.validate().is_err());
        params.allow_large_epsilon = true;
        assert!(params.validate().is_ok());
    }
}
