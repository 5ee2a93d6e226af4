//! Latent aspect space.
//!
//! Unit-normalized sentence embeddings are reduced with PCA, clustered with
//! K-means, and every sentence is mapped to a soft membership vector
//! φ ∝ exp(−τ‖s − c_k‖²) over the K centroids. τ is calibrated from the
//! median nearest-centroid gap.

mod assign;
mod diagnostics;
mod embedding;
mod kmeans;
mod pca;

use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assign::{calibrate_tau, median, nearest_gap, softmax_memberships};
pub use diagnostics::{
    aspect_mass, calinski_harabasz, davies_bouldin, k_selection, silhouette, user_profiles,
    DiagnosticsReport, KSelectionEntry, UserProfileDiagnostic, DEFAULT_SILHOUETTE_SAMPLE,
};
pub use embedding::EmbeddingMatrix;
pub use kmeans::{fit_kmeans, fit_kmeans_with, KMeansFit};
pub use pca::{fit_pca, ComponentTarget, PcaFit};

use crate::simplex::AspectVector;

pub const DEFAULT_RATIO: f64 = 10.0;
pub const DEFAULT_GAP_SAMPLE: usize = 100_000;

#[derive(Debug, Error)]
pub enum AspectError {
    #[error("input has no rows or no columns")]
    EmptyInput,
    #[error("row {row}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        row: usize,
    },
    #[error("row {row} contains a non-finite value")]
    NonFinite { row: usize },
    #[error("row {row} has zero norm")]
    ZeroRow { row: usize },
    #[error("embeddings must be unit-normalized before PCA")]
    NotNormalized,
    #[error("requested {requested} components but at most {max} are possible")]
    BadComponentCount { requested: usize, max: usize },
    #[error("variance target {0} outside (0, 1]")]
    BadVarianceTarget(f64),
    #[error("requested {requested} components but the centered data has rank {rank}")]
    RankDeficient { requested: usize, rank: usize },
    #[error("data has zero total variance")]
    ZeroVariance,
    #[error("cannot fit {k} clusters to {points} points")]
    TooManyClusters { k: usize, points: usize },
    #[error("n_init must be at least 1")]
    BadRestarts,
    #[error("an aspect model needs at least 2 aspects, got {0}")]
    TooFewAspects(usize),
    #[error("membership ratio r must be finite and > 1, got {0}")]
    BadRatio(f64),
    #[error("median nearest-centroid gap is zero; perturb the data or choose another K")]
    ZeroMedianGap,
    #[error("embedding file: {0}")]
    Format(String),
    #[error("model file: {0}")]
    Model(String),
}

/// Frozen PCA basis, K centroids in the reduced space and the temperature τ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectModel {
    pub pca_mean: Vec<f64>,
    pub pca_basis: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub centroids: Vec<Vec<f64>>,
    pub tau: f64,
    pub k: usize,
    pub m: usize,
}

impl AspectModel {
    pub fn validate(&self) -> Result<(), AspectError> {
        let bad = |msg: String| Err(AspectError::Model(msg));
        if self.k < 2 || self.centroids.len() != self.k {
            return bad(format!("k={} with {} centroids", self.k, self.centroids.len()));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if self.pca_basis.len() != self.m || self.explained_variance.len() != self.m {
            return bad(format!("m={} does not match basis/variance lengths", self.m));
        }
        let d = self.pca_mean.len();
        if self.pca_basis.iter().any(|r| r.len() != d) {
            return bad("basis rows must match the embedding dimension".into());
        }
        if self
            .centroids
            .iter()
            .any(|c| c.len() != self.m || c.iter().any(|x| !x.is_finite()))
        {
            return bad("centroids must be finite m-vectors".into());
        }
        for a in 0..self.m {
            for b in a..self.m {
                let dot: f64 = self.pca_basis[a]
                    .iter()
                    .zip(&self.pca_basis[b])
                    .map(|(x, y)| x * y)
                    .sum();
                let want = if a == b { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-6 {
                    return bad(format!("basis rows {a} and {b} are not orthonormal"));
                }
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, AspectError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AspectError::Model(format!("{}: {e}", path.display())))?;
        let model: Self = serde_json::from_str(&text)
            .map_err(|e| AspectError::Model(format!("{}: {e}", path.display())))?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), AspectError> {
        let text = serde_json::to_string_pretty(self).expect("model serializes");
        std::fs::write(path, text).map_err(|e| AspectError::Model(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscoveryConfig {
    pub k: usize,
    pub components: ComponentTarget,
    pub n_init: usize,
    pub seed: u64,
    pub ratio: f64,
    pub gap_sample: usize,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        Self {
            k: 10,
            components: ComponentTarget::VarianceTarget(0.5),
            n_init: 10,
            seed: 7,
            ratio: DEFAULT_RATIO,
            gap_sample: DEFAULT_GAP_SAMPLE,
        }
    }
}

/// Result of offline aspect discovery over a whole corpus.
#[derive(Debug, Clone)]
pub struct AspectSpace {
    pub model: AspectModel,
    /// Reduced PCA coordinates per row of the input matrix.
    pub reduced: Vec<Vec<f64>>,
    /// φ per row of the input matrix.
    pub phi: Vec<AspectVector>,
    pub labels: Vec<usize>,
}

/// Normalize, reduce, cluster, calibrate τ and soft-assign every row.
pub fn discover(emb: EmbeddingMatrix, cfg: &DiscoveryConfig) -> Result<AspectSpace, AspectError> {
    if cfg.k < 2 {
        return Err(AspectError::TooFewAspects(cfg.k));
    }
    let emb = if emb.is_normalized() { emb } else { emb.normalize()? };
    let pca = fit_pca(&emb, cfg.components)?;
    let reduced: Vec<Vec<f64>> = emb.iter_rows().map(|r| pca.project(r)).collect();
    let km = fit_kmeans(&reduced, cfg.k, cfg.n_init, cfg.seed)?;

    let gap_rows: Vec<Vec<f64>> = if reduced.len() <= cfg.gap_sample {
        reduced.clone()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut idx = sample(&mut rng, reduced.len(), cfg.gap_sample).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| reduced[i].clone()).collect()
    };
    let tau = calibrate_tau(&gap_rows, &km.centroids, cfg.ratio)?;

    let model = AspectModel {
        m: pca.components(),
        pca_mean: pca.mean,
        pca_basis: pca.basis,
        explained_variance: pca.explained_variance,
        centroids: km.centroids,
        tau,
        k: cfg.k,
    };
    let phi = reduced.iter().map(|r| model.assign_reduced(r)).collect();
    Ok(AspectSpace {
        model,
        reduced,
        phi,
        labels: km.labels,
    })
}
