//! Probability vectors over the K aspects.
//!
//! Aspect memberships, preference estimates, true preferences and evidence
//! profiles all live on the same simplex, so they share one newtype.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sum tolerance for simplex membership.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SimplexError {
    #[error("vector is empty")]
    Empty,
    #[error("coordinate {index} is {value}; simplex coordinates must be finite and nonnegative")]
    BadCoordinate { index: usize, value: f64 },
    #[error("coordinates sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("weights sum to zero and cannot be normalized")]
    ZeroMass,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("zero vector has no direction")]
    ZeroVector,
}

/// A point of the probability simplex Δ^{K-1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AspectVector(Vec<f64>);

impl AspectVector {
    /// Validates that `values` already lie on the simplex.
    pub fn new(values: Vec<f64>) -> Result<Self, SimplexError> {
        if values.is_empty() {
            return Err(SimplexError::Empty);
        }
        check_coordinates(&values)?;
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(SimplexError::NotNormalized { sum });
        }
        Ok(Self(values))
    }

    /// Normalizes nonnegative weights onto the simplex.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, SimplexError> {
        if weights.is_empty() {
            return Err(SimplexError::Empty);
        }
        check_coordinates(&weights)?;
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(SimplexError::ZeroMass);
        }
        Ok(Self(weights.into_iter().map(|w| w / sum).collect()))
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "uniform vector needs at least one coordinate");
        Self(vec![1.0 / k as f64; k])
    }

    /// The `index`-th vertex e_index of the simplex.
    pub fn one_hot(k: usize, index: usize) -> Self {
        assert!(index < k, "vertex {index} out of range for K={k}");
        let mut v = vec![0.0; k];
        v[index] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn min_coordinate(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index of the largest coordinate, ties resolved to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &v) in self.0.iter().enumerate().skip(1) {
            if v > self.0[best] {
                best = k;
            }
        }
        best
    }

    pub fn dot(&self, other: &AspectVector) -> Result<f64, SimplexError> {
        dot(&self.0, &other.0)
    }

    /// Shannon entropy divided by log K, with 0·log 0 = 0.
    pub fn normalized_entropy(&self) -> f64 {
        let k = self.dim();
        if k < 2 {
            return 0.0;
        }
        let h: f64 = self
            .0
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum();
        h / (k as f64).ln()
    }
}

impl TryFrom<Vec<f64>> for AspectVector {
    type Error = SimplexError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<AspectVector> for Vec<f64> {
    fn from(v: AspectVector) -> Self {
        v.0
    }
}

impl AsRef<[f64]> for AspectVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

fn check_coordinates(values: &[f64]) -> Result<(), SimplexError> {
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(SimplexError::BadCoordinate { index, value });
        }
    }
    Ok(())
}

pub fn dot(a: &[f64], b: &[f64]) -> Result<f64, SimplexError> {
    if a.len() != b.len() {
        return Err(SimplexError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
}

/// Cosine of the angle between two nonzero vectors.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, SimplexError> {
    let num = dot(a, b)?;
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(SimplexError::ZeroVector);
    }
    Ok((num / (na * nb)).clamp(-1.0, 1.0))
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> Result<f64, SimplexError> {
    if a.len() != b.len() {
        return Err(SimplexError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}

/// KL(u‖w) = Σ u_k log(u_k / w_k), with 0·log 0 = 0.
pub fn kl_divergence(u: &[f64], w: &[f64]) -> Result<f64, SimplexError> {
    if u.len() != w.len() {
        return Err(SimplexError::DimensionMismatch {
            left: u.len(),
            right: w.len(),
        });
    }
    Ok(u.iter()
        .zip(w)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &q)| p * (p / q).ln())
        .sum())
}

/// Negative entropy d(w) = Σ w_k log w_k.
pub fn negative_entropy(w: &[f64]) -> f64 {
    w.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum()
}

/// Bregman divergence of the negative entropy, computed from its definition
/// d(u) − d(w) − ∇d(w)ᵀ(u − w).
pub fn entropy_bregman(u: &[f64], w: &[f64]) -> Result<f64, SimplexError> {
    if u.len() != w.len() {
        return Err(SimplexError::DimensionMismatch {
            left: u.len(),
            right: w.len(),
        });
    }
    let linear: f64 = w
        .iter()
        .zip(u)
        .map(|(&wk, &uk)| (wk.ln() + 1.0) * (uk - wk))
        .sum();
    Ok(negative_entropy(u) - negative_entropy(w) - linear)
}
