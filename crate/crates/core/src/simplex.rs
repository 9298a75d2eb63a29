//! Probability vectors and seeded categorical sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Absolute tolerance on the coordinate sum accepted by [`SimplexVector::new`].
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A point on the probability simplex: non-negative coordinates summing to
/// one. Renormalized on construction so downstream code can rely on the sum
/// being exact up to one rounding step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    /// Validates non-negativity and that the sum is within [`SUM_TOLERANCE`]
    /// of one, then renormalizes.
    pub fn new(weights: Vec<f64>) -> Result<Self, CoreError> {
        if weights.is_empty() {
            return Err(CoreError::rejected("simplex vector must have length >= 1"));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(CoreError::rejected(format!(
                    "simplex entry [{i}] = {w} is negative or non-finite"
                )));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(CoreError::rejected(format!(
                "simplex entries sum to {sum}, outside 1 ± {SUM_TOLERANCE}"
            )));
        }
        let mut v = weights;
        for w in &mut v {
            *w /= sum;
        }
        Ok(SimplexVector(v))
    }

    /// Accepts any non-negative vector with a strictly positive sum and
    /// scales it to the simplex. Used where the caller holds unnormalized
    /// multiplicative weights.
    pub fn normalized(weights: Vec<f64>) -> Result<Self, CoreError> {
        if weights.is_empty() {
            return Err(CoreError::rejected("simplex vector must have length >= 1"));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(CoreError::rejected(format!(
                    "weight [{i}] = {w} is negative or non-finite"
                )));
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(CoreError::rejected("weights sum to zero"));
        }
        let mut v = weights;
        for w in &mut v {
            *w /= sum;
        }
        Ok(SimplexVector(v))
    }

    /// Uniform distribution over `n` indices.
    pub fn uniform(n: usize) -> Self {
        assert!(n >= 1, "uniform simplex vector needs n >= 1");
        SimplexVector(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Inner product with a dense vector of the same length.
    pub fn dot(&self, other: &[f64]) -> f64 {
        debug_assert_eq!(self.0.len(), other.len());
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }
}

impl std::ops::Index<usize> for SimplexVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for SimplexVector {
    type Error = CoreError;
    fn try_from(v: Vec<f64>) -> Result<Self, CoreError> {
        SimplexVector::new(v)
    }
}

impl From<SimplexVector> for Vec<f64> {
    fn from(v: SimplexVector) -> Vec<f64> {
        v.0
    }
}

/// Draws an index distributed according to `p` by inverse-CDF over indices
/// in ascending order. Scanning order is part of the contract: ties and
/// rounding resolve toward the smallest admissible index, which keeps seeded
/// runs bit-reproducible.
pub fn sample_categorical<R: Rng + ?Sized>(p: &SimplexVector, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &w) in p.as_slice().iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding slack past the final cumulative sum; return
    // the last index carrying mass.
    p.as_slice()
        .iter()
        .rposition(|&w| w > 0.0)
        .unwrap_or(p.len() - 1)
}
