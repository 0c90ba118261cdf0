//! Dense truncated tensor algebra `T^N(R^d)`.
//!
//! Level `k` is stored as `d^k` contiguous reals in row-major order: the
//! word `(i1, ..., ik)` with letters in `1..=d` lives at flat offset
//! `sum_j (i_j - 1) * d^(k - j)`. The first letter is the most significant
//! digit, so `(a ⊗ b)[x * d^j + y] = a[x] * b[y]` for `b` of level `j`.
//!
//! Every level carries the Euclidean (Frobenius) norm, which is
//! submultiplicative under `⊗`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element of `T^N(R^d)`: one dense coefficient array per level `0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorRecord", into = "TensorRecord")]
pub struct TruncatedTensor {
    dim: usize,
    levels: Vec<Vec<f64>>,
}

/// Serialized form `{dim, depth, levels}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorRecord {
    pub dim: usize,
    pub depth: usize,
    pub levels: Vec<Vec<f64>>,
}

impl TryFrom<TensorRecord> for TruncatedTensor {
    type Error = Error;

    fn try_from(rec: TensorRecord) -> Result<Self> {
        if rec.levels.len() != rec.depth + 1 {
            return Err(Error::Shape(format!(
                "depth {} needs {} levels, got {}",
                rec.depth,
                rec.depth + 1,
                rec.levels.len()
            )));
        }
        TruncatedTensor::from_levels(rec.dim, rec.levels)
    }
}

impl From<TruncatedTensor> for TensorRecord {
    fn from(t: TruncatedTensor) -> Self {
        TensorRecord {
            dim: t.dim,
            depth: t.depth(),
            levels: t.levels,
        }
    }
}

/// Number of coefficients at level `k` over `R^dim`.
#[inline]
pub fn level_size(dim: usize, k: usize) -> usize {
    dim.pow(k as u32)
}

/// Flat offset of a word with 1-based letters.
pub fn flat_index(dim: usize, word: &[usize]) -> Result<usize> {
    let mut offset = 0usize;
    for &letter in word {
        if letter == 0 || letter > dim {
            return Err(Error::InvalidInput(format!(
                "letter {letter} outside 1..={dim}"
            )));
        }
        offset = offset * dim + (letter - 1);
    }
    Ok(offset)
}

/// `out += scale * (a ⊗ b)`.
#[inline]
fn outer_add(out: &mut [f64], a: &[f64], b: &[f64], scale: f64) {
    let nb = b.len();
    debug_assert_eq!(out.len(), a.len() * nb);
    for (row, &ai) in out.chunks_exact_mut(nb).zip(a) {
        let c = ai * scale;
        if c == 0.0 {
            continue;
        }
        for (o, &bj) in row.iter_mut().zip(b) {
            *o += c * bj;
        }
    }
}

impl TruncatedTensor {
    pub fn zeros(dim: usize, depth: usize) -> Self {
        assert!(dim > 0, "tensor dimension must be positive");
        let levels = (0..=depth).map(|k| vec![0.0; level_size(dim, k)]).collect();
        TruncatedTensor { dim, levels }
    }

    /// The unit `(1, 0, ..., 0)`.
    pub fn identity(dim: usize, depth: usize) -> Self {
        let mut t = Self::zeros(dim, depth);
        t.levels[0][0] = 1.0;
        t
    }

    /// Overwrite with the unit element, keeping dimension and depth.
    pub fn set_identity(&mut self) {
        for level in &mut self.levels {
            level.fill(0.0);
        }
        self.levels[0][0] = 1.0;
    }

    pub fn from_levels(dim: usize, levels: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("dimension must be positive".into()));
        }
        if levels.is_empty() {
            return Err(Error::Shape("at least level 0 is required".into()));
        }
        for (k, level) in levels.iter().enumerate() {
            if level.len() != level_size(dim, k) {
                return Err(Error::Shape(format!(
                    "level {k} over R^{dim} needs {} entries, got {}",
                    level_size(dim, k),
                    level.len()
                )));
            }
        }
        Ok(TruncatedTensor { dim, levels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    pub fn level_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.levels[k]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    /// Coefficient of a word (1-based letters); the empty word is level 0.
    pub fn coefficient(&self, word: &[usize]) -> Result<f64> {
        if word.len() > self.depth() {
            return Err(Error::InvalidInput(format!(
                "word of length {} exceeds depth {}",
                word.len(),
                self.depth()
            )));
        }
        Ok(self.levels[word.len()][flat_index(self.dim, word)?])
    }

    /// Keep levels `0..=depth`, padding with zero levels if `depth` exceeds
    /// the current depth.
    pub fn with_depth(&self, depth: usize) -> Self {
        let mut levels: Vec<Vec<f64>> = self.levels.iter().take(depth + 1).cloned().collect();
        for k in levels.len()..=depth {
            levels.push(vec![0.0; level_size(self.dim, k)]);
        }
        TruncatedTensor {
            dim: self.dim,
            levels,
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.depth() != other.depth() {
            return Err(Error::Shape(format!(
                "operands live in T^{}(R^{}) and T^{}(R^{})",
                self.depth(),
                self.dim,
                other.depth(),
                other.dim
            )));
        }
        Ok(())
    }

    /// `self ⊗ other` truncated at the common depth.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let depth = self.depth();
        let mut out = Self::zeros(self.dim, depth);
        for n in 0..=depth {
            let target = &mut out.levels[n];
            for k in 0..=n {
                outer_add(target, &self.levels[k], &other.levels[n - k], 1.0);
            }
        }
        Ok(out)
    }

    /// In place `self <- self ⊗ factor`, where `factor` is only read up to
    /// level `factor_depth` (higher levels are treated as zero).
    ///
    /// Levels are rewritten top-down so every level is formed from the
    /// untouched lower levels of the old value.
    pub fn mul_assign_truncated(&mut self, factor: &Self, factor_depth: usize) -> Result<()> {
        if self.dim != factor.dim || factor_depth > factor.depth() {
            return Err(Error::Shape(format!(
                "cannot multiply T^{}(R^{}) by a factor of depth {} over R^{} read to level {}",
                self.depth(),
                self.dim,
                factor.depth(),
                factor.dim,
                factor_depth
            )));
        }
        let f0 = factor.levels[0][0];
        for n in (0..=self.depth()).rev() {
            let (lower, upper) = self.levels.split_at_mut(n);
            let target = &mut upper[0];
            if f0 != 1.0 {
                target.iter_mut().for_each(|x| *x *= f0);
            }
            for k in 1..=factor_depth.min(n) {
                outer_add(target, &lower[n - k], &factor.levels[k], 1.0);
            }
        }
        Ok(())
    }

    /// In place `self <- self ⊗ exp(v)`, truncated at the current depth.
    ///
    /// Level `m` of the result is `sum_k S_{m-k} ⊗ v^k / k!`, evaluated by
    /// the Horner recursion `acc_j = S_j + acc_{j-1} ⊗ v / (m - j + 1)`.
    pub fn mul_exp_assign(&mut self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Shape(format!(
                "increment has {} components, tensor dimension is {}",
                v.len(),
                self.dim
            )));
        }
        let depth = self.depth();
        let mut acc: Vec<f64> = Vec::new();
        let mut next: Vec<f64> = Vec::new();
        for m in (1..=depth).rev() {
            acc.clear();
            acc.extend_from_slice(&self.levels[0]);
            for j in 1..=m {
                next.clear();
                next.extend_from_slice(&self.levels[j]);
                outer_add(&mut next, &acc, v, 1.0 / (m - j + 1) as f64);
                std::mem::swap(&mut acc, &mut next);
            }
            self.levels[m].copy_from_slice(&acc);
        }
        Ok(())
    }

    /// Euclidean norm of every level.
    pub fn level_norms(&self) -> Vec<f64> {
        self.levels
            .iter()
            .map(|l| l.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }

    pub fn level_norm(&self, k: usize) -> f64 {
        self.levels[k].iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let levels = self
            .levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(TruncatedTensor {
            dim: self.dim,
            levels,
        })
    }

    /// Largest absolute coefficient difference over all levels.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .levels
            .iter()
            .zip(&other.levels)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max))
    }

    /// `self + (self - prev) * weight`, the Richardson update used by the
    /// extension sweep.
    pub(crate) fn extrapolate(&self, prev: &Self, weight: f64) -> Self {
        let levels = self
            .levels
            .iter()
            .zip(&prev.levels)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + (x - y) * weight).collect())
            .collect();
        TruncatedTensor {
            dim: self.dim,
            levels,
        }
    }
}

/// `a ⊗ b` truncated at the common depth.
pub fn truncated_product(a: &TruncatedTensor, b: &TruncatedTensor) -> Result<TruncatedTensor> {
    a.product(b)
}

/// Per-level Euclidean norms.
pub fn level_norms(a: &TruncatedTensor) -> Vec<f64> {
    a.level_norms()
}

/// Signature of the straight segment with increment `v`: level `k` is
/// `v^{⊗k} / k!`.
pub fn segment_signature(v: &[f64], depth: usize) -> TruncatedTensor {
    let dim = v.len();
    let mut t = TruncatedTensor::identity(dim, depth);
    for k in 1..=depth {
        let (lower, upper) = t.levels.split_at_mut(k);
        outer_add(&mut upper[0], &lower[k - 1], v, 1.0 / k as f64);
    }
    t
}
