//! Temperature calibration and distance-softmax soft assignment.

use super::kmeans::sq_dist;
use super::{AspectError, AspectModel};
use crate::simplex::AspectVector;

/// Median with the midpoint of the two central order statistics for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Gap between the second-nearest and nearest squared centroid distances.
pub fn nearest_gap(point: &[f64], centroids: &[Vec<f64>]) -> f64 {
    let (mut d1, mut d2) = (f64::INFINITY, f64::INFINITY);
    for c in centroids {
        let d = sq_dist(point, c);
        if d < d1 {
            d2 = d1;
            d1 = d;
        } else if d < d2 {
            d2 = d;
        }
    }
    d2 - d1
}

/// τ = log(r) / median gap, so that a median-gap point gives its nearest
/// centroid exactly r times the mass of the second nearest.
pub fn calibrate_tau(sample: &[Vec<f64>], centroids: &[Vec<f64>], r: f64) -> Result<f64, AspectError> {
    if centroids.len() < 2 {
        return Err(AspectError::TooFewAspects(centroids.len()));
    }
    if !(r > 1.0) || !r.is_finite() {
        return Err(AspectError::BadRatio(r));
    }
    let gaps: Vec<f64> = sample.iter().map(|p| nearest_gap(p, centroids)).collect();
    let med = median(&gaps).ok_or(AspectError::EmptyInput)?;
    if med <= 0.0 {
        return Err(AspectError::ZeroMedianGap);
    }
    Ok(r.ln() / med)
}

/// φ_k ∝ exp(−τ d_k²), stabilized by subtracting the largest exponent.
pub fn softmax_memberships(reduced: &[f64], centroids: &[Vec<f64>], tau: f64) -> AspectVector {
    let logits: Vec<f64> = centroids.iter().map(|c| -tau * sq_dist(reduced, c)).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    AspectVector::from_weights(weights).expect("max-shifted softmax has positive mass")
}

impl AspectModel {
    /// Projects a raw embedding row into the reduced PCA space. The row is
    /// scaled to unit norm first.
    pub fn reduce(&self, emb_row: &[f64]) -> Result<Vec<f64>, AspectError> {
        if emb_row.len() != self.pca_mean.len() {
            return Err(AspectError::DimensionMismatch {
                expected: self.pca_mean.len(),
                found: emb_row.len(),
                row: 0,
            });
        }
        if emb_row.iter().any(|x| !x.is_finite()) {
            return Err(AspectError::NonFinite { row: 0 });
        }
        let norm = emb_row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(AspectError::ZeroRow { row: 0 });
        }
        let unit: Vec<f64> = emb_row.iter().map(|x| x / norm).collect();
        Ok(super::pca::project(&self.pca_mean, &self.pca_basis, &unit))
    }

    pub fn soft_assign(&self, emb_row: &[f64]) -> Result<AspectVector, AspectError> {
        let reduced = self.reduce(emb_row)?;
        Ok(self.assign_reduced(&reduced))
    }

    pub fn assign_reduced(&self, reduced: &[f64]) -> AspectVector {
        softmax_memberships(reduced, &self.centroids, self.tau)
    }
}
