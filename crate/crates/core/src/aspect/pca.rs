//! Exact PCA through the SVD of the mean-centered data matrix.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{AspectError, EmbeddingMatrix};

/// How many principal components to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentTarget {
    Count(usize),
    /// Smallest m whose cumulative explained-variance ratio reaches the target.
    VarianceTarget(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaFit {
    pub mean: Vec<f64>,
    /// m × d, orthonormal rows, ordered by decreasing variance.
    pub basis: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
    /// Numerical rank of the centered data.
    pub rank: usize,
}

impl PcaFit {
    pub fn components(&self) -> usize {
        self.basis.len()
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.explained_variance
            .iter()
            .map(|v| v / self.total_variance)
            .collect()
    }

    /// Coordinates of `row` in the retained basis.
    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        project(&self.mean, &self.basis, row)
    }

    /// Maps reduced coordinates back to the (uncentered) input space.
    pub fn reconstruct(&self, reduced: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (coef, axis) in reduced.iter().zip(&self.basis) {
            for (o, a) in out.iter_mut().zip(axis) {
                *o += coef * a;
            }
        }
        out
    }
}

pub(crate) fn project(mean: &[f64], basis: &[Vec<f64>], row: &[f64]) -> Vec<f64> {
    basis
        .iter()
        .map(|axis| {
            axis.iter()
                .zip(row.iter().zip(mean))
                .map(|(a, (x, mu))| a * (x - mu))
                .sum()
        })
        .collect()
}

pub fn fit_pca(emb: &EmbeddingMatrix, target: ComponentTarget) -> Result<PcaFit, AspectError> {
    if !emb.is_normalized() {
        return Err(AspectError::NotNormalized);
    }
    let (m_rows, d) = (emb.rows(), emb.dim());
    match target {
        ComponentTarget::Count(m) if m == 0 || m > m_rows.min(d) => {
            return Err(AspectError::BadComponentCount {
                requested: m,
                max: m_rows.min(d),
            })
        }
        ComponentTarget::VarianceTarget(v) if !(v > 0.0 && v <= 1.0) => {
            return Err(AspectError::BadVarianceTarget(v))
        }
        _ => {}
    }

    let mut mean = vec![0.0; d];
    for row in emb.iter_rows() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= m_rows as f64);

    let centered = DMatrix::from_fn(m_rows, d, |i, j| emb.row(i)[j] - mean[j]);
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let denom = (m_rows.max(2) - 1) as f64;
    let variances: Vec<f64> = order
        .iter()
        .map(|&i| svd.singular_values[i].powi(2) / denom)
        .collect();
    let total: f64 = variances.iter().sum();
    let s_max = order.first().map(|&i| svd.singular_values[i]).unwrap_or(0.0);
    let tol = s_max * m_rows.max(d) as f64 * f64::EPSILON;
    let rank = order
        .iter()
        .filter(|&&i| svd.singular_values[i] > tol)
        .count();
    if rank == 0 || total <= 0.0 {
        return Err(AspectError::ZeroVariance);
    }

    let m = match target {
        ComponentTarget::Count(m) => {
            if m > rank {
                return Err(AspectError::RankDeficient {
                    requested: m,
                    rank,
                });
            }
            m
        }
        ComponentTarget::VarianceTarget(v) => {
            let mut cum = 0.0;
            let mut m = rank;
            for (i, var) in variances.iter().enumerate().take(rank) {
                cum += var;
                // guard against the ratio falling a hair short of 1.0
                if cum / total >= v - 1e-12 {
                    m = i + 1;
                    break;
                }
            }
            m
        }
    };

    let basis = order[..m]
        .iter()
        .map(|&i| {
            let mut axis: Vec<f64> = v_t.row(i).iter().copied().collect();
            // sign convention: largest-magnitude entry is positive
            let pivot = axis
                .iter()
                .copied()
                .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            if pivot < 0.0 {
                axis.iter_mut().for_each(|x| *x = -*x);
            }
            axis
        })
        .collect();

    Ok(PcaFit {
        mean,
        basis,
        explained_variance: variances[..m].to_vec(),
        total_variance: total,
        rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normalized(rows: Vec<Vec<f64>>) -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(rows).unwrap().normalize().unwrap()
    }

    #[test]
    fn collinear_points_have_one_component() {
        // two distinct points always span a line
        let emb = normalized(vec![vec![0.6, 0.8], vec![0.8, 0.6], vec![0.6, 0.8]]);
        let fit = fit_pca(&emb, ComponentTarget::VarianceTarget(1.0)).unwrap();
        assert_eq!(fit.components(), 1);
        assert_eq!(fit.rank, 1);
        assert!((fit.explained_variance_ratio()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asking_beyond_rank_names_the_rank() {
        let emb = normalized(vec![vec![0.6, 0.8, 0.0], vec![0.8, 0.6, 0.0], vec![0.6, 0.8, 0.0]]);
        match fit_pca(&emb, ComponentTarget::Count(2)) {
            Err(AspectError::RankDeficient { requested: 2, rank: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn identical_rows_have_no_variance() {
        let emb = normalized(vec![vec![1.0, 2.0]; 4]);
        assert!(matches!(
            fit_pca(&emb, ComponentTarget::Count(1)),
            Err(AspectError::ZeroVariance)
        ));
    }

    #[test]
    fn requires_normalized_input() {
        let emb = EmbeddingMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 1.0]]).unwrap();
        assert!(matches!(
            fit_pca(&emb, ComponentTarget::Count(1)),
            Err(AspectError::NotNormalized)
        ));
    }

    #[test]
    fn full_rank_projection_reconstructs_data() {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                let t = i as f64;
                vec![t.sin() + 2.0, (1.3 * t).cos(), 0.1 * t, (0.7 * t).sin() - 0.5]
            })
            .collect();
        let emb = normalized(rows);
        let fit = fit_pca(&emb, ComponentTarget::Count(4)).unwrap();
        for i in 0..emb.rows() {
            let back = fit.reconstruct(&fit.project(emb.row(i)));
            for (a, b) in back.iter().zip(emb.row(i)) {
                assert!((a - b).abs() < 1e-6);
            }
        }
        // basis orthonormal
        for a in 0..4 {
            for b in 0..4 {
                let d: f64 = fit.basis[a].iter().zip(&fit.basis[b]).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-6);
            }
        }
        assert!(fit
            .explained_variance
            .windows(2)
            .all(|w| w[0] >= w[1]));
    }
}
