//! The Lyons extension: lifting a multiplicative functional from level `n`
//! to higher levels as the limit of products over total dyadic partitions.
//!
//! For a partition `P = {s = u_0 < ... < u_N = t}`, the hat product
//! `X̂^P = X̂(u_0, u_1) ⊗ ... ⊗ X̂(u_{N-1}, u_N)` multiplies the level-`n`
//! data padded with zeros above `n`. Along the ω-balanced dyadic
//! refinements `P_0 ⊂ P_1 ⊂ ...` the levels above `n` converge to the
//! unique multiplicative extension; levels `<= n` are partition-independent.
//! All levels up to the target are lifted in one sweep: the padded product
//! in `T^m` converges to the same limit as lifting one level at a time.

use std::sync::Arc;

use serde::Serialize;

use crate::bounds::frac_factorial;
use crate::error::{Error, Result};
use crate::partition::{DyadicPartition, DEFAULT_BALANCE_TOL};
use crate::path::{ControlledFunctional, MultiplicativeFunctional};
use crate::tensor::TruncatedTensor;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionConfig {
    /// Stop once the estimate of the new levels moves by less than this
    /// (in norm) on two consecutive refinements.
    pub convergence_tol: f64,
    /// Largest dyadic order `K_max`.
    pub max_order: u32,
    pub target_depth: usize,
    /// Never stop before this order.
    pub min_order: u32,
    pub partition_tol: f64,
    /// Richardson acceleration of the dyadic limit.
    pub extrapolate: bool,
    /// Effective variation exponent of the data, fixing the error
    /// exponents `(n + 1 + j) / regularity - 1` removed by extrapolation.
    /// Functionals built from bounded-variation paths have regularity 1
    /// whatever their nominal `p`.
    pub regularity: f64,
    /// Richardson columns.
    pub extrapolation_steps: usize,
}

impl Default for ExtensionConfig {
    fn default() -> Self {
        ExtensionConfig {
            convergence_tol: 1e-10,
            max_order: 20,
            target_depth: 4,
            min_order: 2,
            partition_tol: DEFAULT_BALANCE_TOL,
            extrapolate: true,
            regularity: 1.0,
            extrapolation_steps: 2,
        }
    }
}

impl ExtensionConfig {
    pub fn with_target(mut self, depth: usize) -> Self {
        self.target_depth = depth;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidInput("convergence_tol must be > 0".into()));
        }
        if self.max_order < 1 {
            return Err(Error::InvalidInput("max_order must be >= 1".into()));
        }
        if !(self.regularity >= 1.0) {
            return Err(Error::InvalidInput("regularity must be >= 1".into()));
        }
        Ok(())
    }
}

/// `β >= p / (1 - (1/2)^((⌊p⌋ + 1)/p - 1))`, the admissibility condition for
/// the extension to keep the same control and constant.
pub fn lyons_beta_threshold(p: f64) -> f64 {
    let e = (p.floor() + 1.0) / p - 1.0;
    p / (1.0 - 0.5f64.powf(e))
}

/// `X̂^P`: the product over `partition` of `X` at depth `depth_in` with a
/// zero level `depth_in + 1` appended, in `T^(depth_in + 1)`.
pub fn hat_partition_product(
    x: &ControlledFunctional,
    partition: &DyadicPartition,
    depth_in: usize,
) -> Result<TruncatedTensor> {
    hat_product_to(x, partition, depth_in, depth_in + 1)
}

/// Like [`hat_partition_product`], padding with zeros up to `target`.
pub fn hat_product_to(
    x: &ControlledFunctional,
    partition: &DyadicPartition,
    depth_in: usize,
    target: usize,
) -> Result<TruncatedTensor> {
    if depth_in < x.floor_p() {
        return Err(Error::Precondition(format!(
            "lifting needs depth_in >= ⌊p⌋ = {}, got {depth_in}",
            x.floor_p()
        )));
    }
    let mut acc = TruncatedTensor::identity(x.dim(), target);
    for (a, b) in partition.intervals() {
        let factor = x.evaluate(a, b, depth_in.min(target))?;
        acc.mul_assign_truncated(&factor, depth_in.min(target))?;
    }
    Ok(acc)
}

/// `Σ_{k=1}^{n} X^k(u_prev, u) ⊗ X^{n+1-k}(u, u_next)`, the change of the
/// level-`n+1` hat product when `u` is dropped from a partition.
pub fn drop_point_defect(
    x: &ControlledFunctional,
    u_prev: f64,
    u: f64,
    u_next: f64,
    depth_in: usize,
) -> Result<Vec<f64>> {
    if !(u_prev <= u && u <= u_next) {
        return Err(Error::InvalidInput(format!(
            "points must be ordered, got {u_prev}, {u}, {u_next}"
        )));
    }
    let left = x.evaluate(u_prev, u, depth_in)?;
    let right = x.evaluate(u, u_next, depth_in)?;
    let top = depth_in + 1;
    let mut out = vec![0.0; crate::tensor::level_size(x.dim(), top)];
    for k in 1..=depth_in {
        let b = right.level(top - k);
        for (row, &l) in out.chunks_exact_mut(b.len()).zip(left.level(k)) {
            for (o, &r) in row.iter_mut().zip(b) {
                *o += l * r;
            }
        }
    }
    Ok(out)
}

/// Successive hat products of several functionals along one sequence of
/// total dyadic partitions `P_0, P_1, ...` of `[s, t]`.
///
/// All functionals must share the control that balances the partitions.
pub struct HatSweep<'a> {
    functionals: &'a [&'a ControlledFunctional],
    depth_in: usize,
    target: usize,
    partition_tol: f64,
    partition: Option<DyadicPartition>,
    s: f64,
    t: f64,
}

impl<'a> HatSweep<'a> {
    pub fn new(
        functionals: &'a [&'a ControlledFunctional],
        s: f64,
        t: f64,
        depth_in: usize,
        target: usize,
        partition_tol: f64,
    ) -> Result<Self> {
        let first = functionals
            .first()
            .ok_or_else(|| Error::InvalidInput("no functionals to sweep".into()))?;
        if functionals.iter().any(|f| f.dim() != first.dim()) {
            return Err(Error::Shape("functionals live over different dimensions".into()));
        }
        if target < depth_in {
            return Err(Error::InvalidInput(format!("target {target} below input depth {depth_in}")));
        }
        for f in functionals {
            if depth_in < f.floor_p() || depth_in > f.native_depth() {
                return Err(Error::Precondition(format!(
                    "input depth {depth_in} must lie in [⌊p⌋, native depth] = [{}, {}]",
                    f.floor_p(),
                    f.native_depth()
                )));
            }
        }
        Ok(HatSweep {
            functionals,
            depth_in,
            target,
            partition_tol,
            partition: None,
            s,
            t,
        })
    }

    pub fn partition(&self) -> Option<&DyadicPartition> {
        self.partition.as_ref()
    }

    /// Refine once and return the hat products over the new partition, one
    /// per functional.
    pub fn advance(&mut self) -> Result<Vec<TruncatedTensor>> {
        let omega = self.functionals[0].control();
        let next = match &self.partition {
            None => DyadicPartition::trivial(omega, self.s, self.t)?,
            Some(p) => p.refine(omega, self.partition_tol)?,
        };
        let dim = self.functionals[0].dim();
        let mut products = Vec::with_capacity(self.functionals.len());
        let mut factor = TruncatedTensor::identity(dim, self.depth_in);
        for f in self.functionals {
            let mut tree = ProductTree::new(dim, self.target);
            for (a, b) in next.intervals() {
                f.evaluate_into(a, b, &mut factor)?;
                tree.push(&factor, self.depth_in)?;
            }
            products.push(tree.finish()?);
        }
        self.partition = Some(next);
        Ok(products)
    }
}

/// Ordered product of many factors: sequential within blocks, then a
/// binary tree over blocks, which keeps rounding growth logarithmic in the
/// number of blocks.
struct ProductTree {
    dim: usize,
    depth: usize,
    block: TruncatedTensor,
    in_block: usize,
    /// Completed subproducts in time order, tagged with their tree height.
    stack: Vec<(u32, TruncatedTensor)>,
}

const PRODUCT_BLOCK: usize = 64;

impl ProductTree {
    fn new(dim: usize, depth: usize) -> Self {
        ProductTree {
            dim,
            depth,
            block: TruncatedTensor::identity(dim, depth),
            in_block: 0,
            stack: Vec::new(),
        }
    }

    fn push(&mut self, factor: &TruncatedTensor, factor_depth: usize) -> Result<()> {
        self.block.mul_assign_truncated(factor, factor_depth)?;
        self.in_block += 1;
        if self.in_block == PRODUCT_BLOCK {
            let done = std::mem::replace(&mut self.block, TruncatedTensor::identity(self.dim, self.depth));
            self.in_block = 0;
            self.stack.push((0, done));
            while self.stack.len() >= 2 && self.stack[self.stack.len() - 1].0 == self.stack[self.stack.len() - 2].0 {
                let (h, right) = self.stack.pop().unwrap();
                let (_, left) = self.stack.pop().unwrap();
                self.stack.push((h + 1, left.product(&right)?));
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<TruncatedTensor> {
        let mut acc: Option<TruncatedTensor> = None;
        for (_, t) in self.stack {
            acc = Some(match acc {
                None => t,
                Some(a) => a.product(&t)?,
            });
        }
        match acc {
            None => Ok(self.block),
            Some(a) if self.in_block > 0 => a.product(&self.block),
            Some(a) => Ok(a),
        }
    }
}

/// One refinement step of an extension run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepStep {
    pub order: u32,
    /// `‖(X̂^{P_K} - X̂^{P_{K-1}})^{n+1}‖` (zero at `K = 0`).
    pub raw_increment: f64,
    /// Norm of the change of the accelerated estimate over all new levels.
    pub estimate_increment: f64,
}

/// Result of lifting one functional on one interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extension {
    pub value: TruncatedTensor,
    pub order_reached: u32,
    pub steps: Vec<SweepStep>,
    pub warnings: Vec<String>,
}

/// Norm of the levels `from..=to` of `a - b`.
fn levels_diff_norm(a: &TruncatedTensor, b: &TruncatedTensor, from: usize, to: usize) -> f64 {
    (from..=to)
        .map(|k| {
            a.level(k)
                .iter()
                .zip(b.level(k))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// Richardson table over successive raw products.
struct Richardson {
    weights: Vec<f64>,
    previous_row: Vec<TruncatedTensor>,
}

impl Richardson {
    fn new(depth_in: usize, regularity: f64, steps: usize) -> Self {
        let weights = (0..steps)
            .map(|j| {
                let exponent = (depth_in + 1 + j) as f64 / regularity - 1.0;
                1.0 / (2f64.powf(exponent) - 1.0)
            })
            .collect();
        Richardson {
            weights,
            previous_row: Vec::new(),
        }
    }

    /// Push the raw value for the next order and return the best estimate.
    fn push(&mut self, raw: TruncatedTensor) -> TruncatedTensor {
        let mut row = vec![raw];
        for (j, &w) in self.weights.iter().enumerate() {
            let Some(prev) = self.previous_row.get(j) else { break };
            let next = row[j].extrapolate(prev, w);
            row.push(next);
        }
        let best = row.last().unwrap().clone();
        self.previous_row = row;
        best
    }
}

/// Outcome of a joint extension of several functionals on one interval.
#[derive(Debug, Clone)]
pub struct JointExtension {
    pub values: Vec<TruncatedTensor>,
    pub order_reached: u32,
    pub steps: Vec<Vec<SweepStep>>,
}

/// Lift several functionals sharing one control on `[s, t]` to
/// `config.target_depth`, sweeping the dyadic partitions once for all.
pub fn extend_jointly(
    functionals: &[&ControlledFunctional],
    s: f64,
    t: f64,
    config: &ExtensionConfig,
) -> Result<JointExtension> {
    config.validate()?;
    let first = functionals
        .first()
        .ok_or_else(|| Error::InvalidInput("no functionals to extend".into()))?;
    let depth_in = functionals.iter().map(|f| f.native_depth()).min().unwrap();
    let target = config.target_depth;
    if target <= depth_in || s == t {
        let values = functionals
            .iter()
            .map(|f| Ok(f.evaluate(s, t, target.min(depth_in))?.with_depth(target)))
            .collect::<Result<Vec<_>>>()?;
        return Ok(JointExtension {
            values,
            order_reached: 0,
            steps: vec![Vec::new(); functionals.len()],
        });
    }
    if first.control().eval(s, t) == 0.0 {
        // Zero control forces every level above zero to vanish.
        let values = functionals
            .iter()
            .map(|f| Ok(f.evaluate(s, t, depth_in)?.with_depth(target)))
            .collect::<Result<Vec<_>>>()?;
        return Ok(JointExtension {
            values,
            order_reached: 0,
            steps: vec![Vec::new(); functionals.len()],
        });
    }

    let mut sweep = HatSweep::new(functionals, s, t, depth_in, target, config.partition_tol)?;
    let steps_count = if config.extrapolate { config.extrapolation_steps } else { 0 };
    let mut tables: Vec<Richardson> = functionals
        .iter()
        .map(|_| Richardson::new(depth_in, config.regularity, steps_count))
        .collect();
    let mut raw_prev: Vec<Option<TruncatedTensor>> = vec![None; functionals.len()];
    let mut est_prev: Vec<Option<TruncatedTensor>> = vec![None; functionals.len()];
    let mut steps: Vec<Vec<SweepStep>> = vec![Vec::new(); functionals.len()];
    let mut quiet_in_a_row = 0;
    let mut last_increment = f64::INFINITY;

    for order in 0..=config.max_order {
        let raws = sweep.advance()?;
        let mut worst = 0.0f64;
        for (i, raw) in raws.into_iter().enumerate() {
            let raw_increment = raw_prev[i]
                .as_ref()
                .map_or(0.0, |p| levels_diff_norm(&raw, p, depth_in + 1, depth_in + 1));
            let estimate = tables[i].push(raw.clone());
            let estimate_increment = est_prev[i]
                .as_ref()
                .map_or(f64::INFINITY, |p| levels_diff_norm(&estimate, p, depth_in + 1, target));
            worst = worst.max(estimate_increment);
            steps[i].push(SweepStep {
                order,
                raw_increment,
                estimate_increment,
            });
            raw_prev[i] = Some(raw);
            est_prev[i] = Some(estimate);
        }
        last_increment = worst;
        quiet_in_a_row = if worst < config.convergence_tol { quiet_in_a_row + 1 } else { 0 };
        if order >= config.min_order && quiet_in_a_row >= 2 {
            let values = est_prev.into_iter().map(Option::unwrap).collect();
            return Ok(JointExtension {
                values,
                order_reached: order,
                steps,
            });
        }
    }
    Err(Error::NotConverged {
        s,
        t,
        max_order: config.max_order,
        last_increment,
    })
}

/// Lift `x` on `[s, t]` to `config.target_depth`.
pub fn lyons_extend(x: &ControlledFunctional, s: f64, t: f64, config: &ExtensionConfig) -> Result<Extension> {
    let mut warnings = Vec::new();
    let threshold = lyons_beta_threshold(x.p());
    if x.beta() < threshold {
        warnings.push(format!(
            "beta = {} is below the extension threshold {threshold}; the limit is computed anyway",
            x.beta()
        ));
    }
    let joint = extend_jointly(&[x], s, t, config)?;
    Ok(Extension {
        value: joint.values.into_iter().next().unwrap(),
        order_reached: joint.order_reached,
        steps: joint.steps.into_iter().next().unwrap(),
        warnings,
    })
}

/// `(1/2^K)^((n+1)/p - 1) · 2p · ω^((n+1)/p) / (β² ((n+1)/p)!)`, the bound on
/// the change of the level-`n+1` hat product between `P_K` and `P_{K+1}`.
pub fn refinement_increment_bound(p: f64, beta: f64, omega: f64, n: usize, order: u32) -> f64 {
    let e = (n + 1) as f64 / p;
    0.5f64.powf(order as f64 * (e - 1.0)) * 2.0 * p * omega.powf(e) / (beta * beta * frac_factorial(e))
}

/// A functional whose levels above the base data are computed by
/// [`lyons_extend`] on demand.
pub struct ExtendedFunctional {
    base: ControlledFunctional,
    config: ExtensionConfig,
}

impl ExtendedFunctional {
    pub fn new(base: ControlledFunctional, config: ExtensionConfig) -> Self {
        ExtendedFunctional { base, config }
    }

    /// The extension as a controlled functional with the base's `p`, `β`
    /// and control.
    pub fn controlled(base: &ControlledFunctional, config: ExtensionConfig) -> Result<ControlledFunctional> {
        let inner: Arc<dyn MultiplicativeFunctional> = Arc::new(ExtendedFunctional::new(base.clone(), config));
        ControlledFunctional::new(inner, base.p(), base.beta(), base.control().clone())
    }
}

impl MultiplicativeFunctional for ExtendedFunctional {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn native_depth(&self) -> usize {
        self.config.target_depth.max(self.base.native_depth())
    }

    fn evaluate(&self, s: f64, t: f64, depth: usize) -> Result<TruncatedTensor> {
        if depth <= self.base.native_depth() {
            return self.base.evaluate(s, t, depth);
        }
        if depth > self.native_depth() {
            return Err(Error::InvalidInput(format!(
                "extension targets depth {}, requested {depth}",
                self.native_depth()
            )));
        }
        let config = self.config.clone().with_target(depth);
        Ok(lyons_extend(&self.base, s, t, &config)?.value)
    }
}
