//! Set-function views of the extraction objective, used to check the
//! greedy loop against its definitions. Candidates are addressed by
//! position; `sim(i, j)` must be symmetric.

/// J(S) = λ Σ_{i∈S} Rel_i − (1−λ) Σ_{i<j∈S} sim(i, j).
pub fn objective<F: Fn(usize, usize) -> f64>(rel: &[f64], sim: F, lambda: f64, set: &[usize]) -> f64 {
    let gain: f64 = set.iter().map(|&i| rel[i]).sum();
    let mut overlap = 0.0;
    for (a, &i) in set.iter().enumerate() {
        for &j in &set[a + 1..] {
            overlap += sim(i, j);
        }
    }
    lambda * gain - (1.0 - lambda) * overlap
}

/// Δ(j | S) = J(S ∪ {j}) − J(S) = λ Rel_j − (1−λ) Σ_{i∈S} sim(i, j).
pub fn marginal_gain<F: Fn(usize, usize) -> f64>(
    rel: &[f64],
    sim: F,
    lambda: f64,
    set: &[usize],
    j: usize,
) -> f64 {
    lambda * rel[j] - (1.0 - lambda) * set.iter().map(|&i| sim(i, j)).sum::<f64>()
}

/// max_{i∈S} sim(i, j), with zero for the empty set and as the floor.
pub fn redundancy<F: Fn(usize, usize) -> f64>(sim: F, set: &[usize], j: usize) -> f64 {
    set.iter().map(|&i| sim(i, j)).fold(0.0, f64::max)
}

/// a(j; S) = λ Rel_j − (1−λ) max_{i∈S} sim(i, j).
pub fn mmr_score<F: Fn(usize, usize) -> f64>(
    rel: &[f64],
    sim: F,
    lambda: f64,
    set: &[usize],
    j: usize,
) -> f64 {
    lambda * rel[j] - (1.0 - lambda) * redundancy(sim, set, j)
}
