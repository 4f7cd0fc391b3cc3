use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on each context block's sum.
pub const BLOCK_SUM_TOL: f64 = 1e-9;

/// Concatenated conditional probabilities `p(y_k | theta_j)`, context-major:
/// all `K` outcomes of the first context, then the second, and so on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatVector {
    contexts: usize,
    outcomes: usize,
    values: Vec<f64>,
}

impl StatVector {
    /// Validates non-negativity and per-context normalization.
    pub fn new(contexts: usize, outcomes: usize, values: Vec<f64>) -> Result<Self> {
        Error::check_dim(contexts * outcomes, values.len())?;
        if contexts == 0 || outcomes == 0 {
            return Err(Error::InvalidStatistics("empty statistics".into()));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::InvalidStatistics(format!(
                "entry {i} (context {}, outcome {}) is {v}",
                i / outcomes,
                i % outcomes
            )));
        }
        for (j, block) in values.chunks(outcomes).enumerate() {
            let s: f64 = block.iter().sum();
            if (s - 1.0).abs() > BLOCK_SUM_TOL {
                return Err(Error::InvalidStatistics(format!("context {j} sums to {s}")));
            }
        }
        Ok(Self {
            contexts,
            outcomes,
            values,
        })
    }

    /// Clamps negatives to zero and rescales each block to unit mass.
    /// Fails if a block has no positive mass.
    pub fn normalized(contexts: usize, outcomes: usize, mut values: Vec<f64>) -> Result<Self> {
        Error::check_dim(contexts * outcomes, values.len())?;
        for (j, block) in values.chunks_mut(outcomes).enumerate() {
            block.iter_mut().for_each(|v| *v = v.max(0.0));
            let s: f64 = block.iter().sum();
            if !(s > 0.0) {
                return Err(Error::InvalidStatistics(format!("context {j} has no mass")));
            }
            block.iter_mut().for_each(|v| *v /= s);
        }
        Self::new(contexts, outcomes, values)
    }

    pub fn contexts(&self) -> usize {
        self.contexts
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn block(&self, j: usize) -> &[f64] {
        &self.values[j * self.outcomes..(j + 1) * self.outcomes]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.outcomes)
    }

    pub fn dot(&self, c: &[f64]) -> Result<f64> {
        Error::check_dim(self.len(), c.len())?;
        Ok(dot(&self.values, c))
    }
}

/// Inner product over the common length, accumulated in eight lanes so the
/// loop vectorizes; the summation order is fixed, so results are
/// reproducible.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
