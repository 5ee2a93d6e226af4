//! Lloyd's k-means with k-means++ seeding and best-of-n restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::AspectError;

pub const DEFAULT_MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every assignment step of the winning restart.
    pub inertia_history: Vec<f64>,
    pub restart: usize,
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid (lowest index on ties) and its squared distance.
pub(crate) fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

pub fn fit_kmeans(
    data: &[Vec<f64>],
    k: usize,
    n_init: usize,
    seed: u64,
) -> Result<KMeansFit, AspectError> {
    fit_kmeans_with(data, k, n_init, seed, DEFAULT_MAX_ITER)
}

pub fn fit_kmeans_with(
    data: &[Vec<f64>],
    k: usize,
    n_init: usize,
    seed: u64,
    max_iter: usize,
) -> Result<KMeansFit, AspectError> {
    if data.is_empty() {
        return Err(AspectError::EmptyInput);
    }
    if k == 0 || k > data.len() {
        return Err(AspectError::TooManyClusters {
            k,
            points: data.len(),
        });
    }
    if n_init == 0 {
        return Err(AspectError::BadRestarts);
    }
    let dim = data[0].len();
    if let Some(row) = data.iter().position(|r| r.len() != dim) {
        return Err(AspectError::DimensionMismatch {
            expected: dim,
            found: data[row].len(),
            row,
        });
    }

    let mut best: Option<KMeansFit> = None;
    for restart in 0..n_init {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
        let init = kmeans_plus_plus(data, k, &mut rng);
        let fit = lloyd(data, init, max_iter, restart);
        // strict comparison keeps the lower restart index on ties
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("n_init >= 1"))
}

fn kmeans_plus_plus(data: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = data.len();
    let mut centroids = vec![data[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = data.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // every point coincides with a chosen centroid
            rng.random_range(0..n)
        } else {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target {
                    pick = i;
                    break;
                }
            }
            pick
        };
        centroids.push(data[next].clone());
        let c = centroids.last().unwrap();
        for (d, p) in d2.iter_mut().zip(data) {
            *d = d.min(sq_dist(p, c));
        }
    }
    centroids
}

fn lloyd(data: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iter: usize, restart: usize) -> KMeansFit {
    let k = centroids.len();
    let dim = data[0].len();
    let mut labels = vec![usize::MAX; data.len()];
    let mut dists = vec![0.0; data.len()];
    let mut history = Vec::new();

    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut inertia = 0.0;
        for (i, p) in data.iter().enumerate() {
            let (label, d) = nearest(p, &centroids);
            if labels[i] != label {
                labels[i] = label;
                changed = true;
            }
            dists[i] = d;
            inertia += d;
        }
        history.push(inertia);
        if !changed {
            break;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in data.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut taken = vec![false; data.len()];
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // re-seed an empty cluster at the point farthest from its centroid
                let far = (0..data.len())
                    .filter(|&i| !taken[i])
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .expect("k <= number of points");
                taken[far] = true;
                dists[far] = 0.0;
                centroids[c] = data[far].clone();
            }
        }
    }

    let inertia = *history.last().unwrap();
    KMeansFit {
        centroids,
        labels,
        inertia,
        inertia_history: history,
        restart,
    }
}
