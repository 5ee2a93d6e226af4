//! Cluster-quality indices for choosing K and per-user aspect profiles.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kmeans::{fit_kmeans, sq_dist};
use super::AspectError;
use crate::corpus::CorpusTables;
use crate::simplex::AspectVector;

/// Silhouette is quadratic in the point count; larger inputs are subsampled.
pub const DEFAULT_SILHOUETTE_SAMPLE: usize = 2_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelectionEntry {
    pub k: usize,
    pub inertia: f64,
    pub silhouette: f64,
    pub calinski_harabasz: f64,
    pub davies_bouldin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfileDiagnostic {
    pub user_id: String,
    pub w_hat_empirical: AspectVector,
    pub normalized_entropy: f64,
    pub sentences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub k_selection: Vec<KSelectionEntry>,
    pub aspect_mass: Vec<f64>,
    pub users: Vec<UserProfileDiagnostic>,
}

fn centroids_of(data: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = data[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in data.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, c)| s.into_iter().map(|x| x / c.max(1) as f64).collect())
        .collect()
}

/// Mean silhouette over `indices`; members of singleton clusters score 0.
pub fn silhouette(data: &[Vec<f64>], labels: &[usize], k: usize, indices: &[usize]) -> f64 {
    let sizes = labels.iter().fold(vec![0usize; k], |mut acc, &l| {
        acc[l] += 1;
        acc
    });
    if sizes.iter().filter(|&&s| s > 0).count() < 2 || indices.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for &i in indices {
        let own = labels[i];
        if sizes[own] <= 1 {
            continue;
        }
        let mut sums = vec![0.0; k];
        for (j, p) in data.iter().enumerate() {
            if j != i {
                sums[labels[j]] += sq_dist(&data[i], p).sqrt();
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    total / indices.len() as f64
}

/// Between-cluster over within-cluster dispersion, each scaled by its
/// degrees of freedom.
pub fn calinski_harabasz(data: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let n = data.len();
    if k < 2 || n <= k {
        return 0.0;
    }
    let centroids = centroids_of(data, labels, k);
    let global = centroids_of(data, &vec![0; n], 1).remove(0);
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&l| sizes[l] += 1);
    let between: f64 = centroids
        .iter()
        .zip(&sizes)
        .map(|(c, &s)| s as f64 * sq_dist(c, &global))
        .sum();
    let within: f64 = data
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l]))
        .sum();
    if within == 0.0 {
        return f64::INFINITY;
    }
    (between / (k - 1) as f64) / (within / (n - k) as f64)
}

/// Mean over clusters of the worst (s_i + s_j) / d(c_i, c_j) ratio, where
/// s_i is the mean distance of cluster i's members to its centroid.
pub fn davies_bouldin(data: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let centroids = centroids_of(data, labels, k);
    let mut scatter = vec![0.0; k];
    let mut sizes = vec![0usize; k];
    for (p, &l) in data.iter().zip(labels) {
        scatter[l] += sq_dist(p, &centroids[l]).sqrt();
        sizes[l] += 1;
    }
    let live: Vec<usize> = (0..k).filter(|&c| sizes[c] > 0).collect();
    if live.len() < 2 {
        return 0.0;
    }
    for &c in &live {
        scatter[c] /= sizes[c] as f64;
    }
    let worst: f64 = live
        .iter()
        .map(|&i| {
            live.iter()
                .filter(|&&j| j != i)
                .map(|&j| {
                    let d = sq_dist(&centroids[i], &centroids[j]).sqrt();
                    if d == 0.0 {
                        f64::INFINITY
                    } else {
                        (scatter[i] + scatter[j]) / d
                    }
                })
                .fold(0.0, f64::max)
        })
        .sum();
    worst / live.len() as f64
}

/// Fits K-means for every candidate K and reports the three indices.
pub fn k_selection(
    reduced: &[Vec<f64>],
    candidates: &[usize],
    n_init: usize,
    seed: u64,
    silhouette_sample: usize,
) -> Result<Vec<KSelectionEntry>, AspectError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices: Vec<usize> = if reduced.len() <= silhouette_sample {
        (0..reduced.len()).collect()
    } else {
        let mut v = sample(&mut rng, reduced.len(), silhouette_sample).into_vec();
        v.sort_unstable();
        v
    };
    candidates
        .iter()
        .map(|&k| {
            let fit = fit_kmeans(reduced, k, n_init, seed)?;
            Ok(KSelectionEntry {
                k,
                inertia: fit.inertia,
                silhouette: silhouette(reduced, &fit.labels, k, &indices),
                calinski_harabasz: calinski_harabasz(reduced, &fit.labels, k),
                davies_bouldin: davies_bouldin(reduced, &fit.labels, k),
            })
        })
        .collect()
}

/// m_k = Σ_i φ_ik / Σ_{j,i} φ_ij.
pub fn aspect_mass(phi: &[AspectVector]) -> Vec<f64> {
    let Some(first) = phi.first() else {
        return Vec::new();
    };
    let mut mass = vec![0.0; first.dim()];
    for v in phi {
        for (m, p) in mass.iter_mut().zip(v.as_slice()) {
            *m += p;
        }
    }
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= total);
    mass
}

/// Empirical per-user profile: the mean φ over the user's sentences.
/// `phi` is indexed by sentence id. Users without sentences are absent.
pub fn user_profiles(tables: &CorpusTables, phi: &[AspectVector]) -> Vec<UserProfileDiagnostic> {
    let mut acc: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();
    for s in &tables.sentences {
        let Some(p) = phi.get(s.sentence_id) else {
            continue;
        };
        let entry = acc
            .entry(s.user_id.as_str())
            .or_insert_with(|| (vec![0.0; p.dim()], 0));
        for (a, x) in entry.0.iter_mut().zip(p.as_slice()) {
            *a += x;
        }
        entry.1 += 1;
    }
    acc.into_iter()
        .map(|(user, (sum, n))| {
            let w = AspectVector::from_weights(sum).expect("mean of simplex vectors");
            UserProfileDiagnostic {
                user_id: user.to_string(),
                normalized_entropy: w.normalized_entropy(),
                w_hat_empirical: w,
                sentences: n,
            }
        })
        .collect()
}
