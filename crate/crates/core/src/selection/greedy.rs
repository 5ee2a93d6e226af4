//! The shared greedy extraction loop.

use super::{
    relevance, similarity, EvidenceCandidate, Pick, SelectedEvidence, SelectionConfig,
    SelectionError, SelectionMode,
};
use crate::rng::{CounterRng, StreamKind};
use crate::simplex::{AspectVector, SimplexError};

/// Runs the extractor chosen by `cfg.mode`.
pub fn select(
    candidates: &[EvidenceCandidate],
    w_hat: &AspectVector,
    cfg: &SelectionConfig,
    round_t: u64,
) -> Result<SelectedEvidence, SelectionError> {
    match cfg.mode {
        SelectionMode::Deterministic => select_mmr(candidates, w_hat, cfg),
        SelectionMode::Gumbel => select_gumbel(candidates, w_hat, cfg, round_t),
    }
}

pub fn select_mmr(
    candidates: &[EvidenceCandidate],
    w_hat: &AspectVector,
    cfg: &SelectionConfig,
) -> Result<SelectedEvidence, SelectionError> {
    extract(candidates, w_hat, cfg, |_, _, a| a)
}

/// Gumbel-priority extraction. Draws are addressed by
/// (seed, round_t, step, sentence_id), so a run can be replayed exactly.
pub fn select_gumbel(
    candidates: &[EvidenceCandidate],
    w_hat: &AspectVector,
    cfg: &SelectionConfig,
    round_t: u64,
) -> Result<SelectedEvidence, SelectionError> {
    let beta = cfg.beta_at(round_t);
    let rng = CounterRng::new(cfg.seed, StreamKind::Gumbel);
    extract(candidates, w_hat, cfg, |step, cand, a| {
        beta * a + rng.gumbel(round_t, step, cand.sentence_id as u64)
    })
}

fn extract<F>(
    candidates: &[EvidenceCandidate],
    w_hat: &AspectVector,
    cfg: &SelectionConfig,
    mut key: F,
) -> Result<SelectedEvidence, SelectionError>
where
    F: FnMut(u32, &EvidenceCandidate, f64) -> f64,
{
    cfg.validate()?;
    if candidates.is_empty() {
        return Err(SelectionError::EmptyCandidates);
    }
    let dim = candidates[0].reduced.len();
    let mut rel = Vec::with_capacity(candidates.len());
    for c in candidates {
        let fail = |source| SelectionError::Candidate {
            sentence_id: c.sentence_id,
            source,
        };
        if c.reduced.len() != dim {
            return Err(fail(SimplexError::DimensionMismatch {
                left: dim,
                right: c.reduced.len(),
            }));
        }
        if c.reduced.iter().all(|&x| x == 0.0) {
            return Err(fail(SimplexError::ZeroVector));
        }
        rel.push(relevance(w_hat, &c.phi)?);
    }

    let n = candidates.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| candidates[i].sentence_id);

    let lambda = cfg.lambda;
    let mut cached = vec![0.0f64; n];
    let mut picked = vec![false; n];
    let mut picks = Vec::new();
    let mut tokens = 0usize;

    for step in 0..cfg.max_sentences {
        let mut best: Option<(usize, f64, f64)> = None;
        for &j in &order {
            if picked[j] {
                continue;
            }
            if cfg
                .max_tokens
                .is_some_and(|budget| tokens + candidates[j].token_count > budget)
            {
                continue;
            }
            let a = lambda * rel[j] - (1.0 - lambda) * cached[j];
            let k = key(step as u32, &candidates[j], a);
            // strict comparison keeps the lowest sentence_id on ties
            if best.is_none_or(|(_, bk, _)| k > bk) {
                best = Some((j, k, a));
            }
        }
        let Some((j, _, a)) = best else {
            break;
        };
        picked[j] = true;
        tokens += candidates[j].token_count;
        picks.push(Pick {
            sentence_id: candidates[j].sentence_id,
            score: a,
        });
        for i in 0..n {
            if !picked[i] {
                let s = similarity(&candidates[j].reduced, &candidates[i].reduced)?;
                cached[i] = cached[i].max(s);
            }
        }
    }

    Ok(SelectedEvidence {
        picks,
        total_tokens: tokens,
        aspect_profile: None,
    })
}

/// Softmax of β·scores, the pick law of one Gumbel step.
pub fn boltzmann_probabilities(scores: &[f64], beta: f64) -> Vec<f64> {
    let max = scores.iter().map(|s| beta * s).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = scores.iter().map(|s| (beta * s - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// One perturbed step: argmax_i β·scores[i] + g_i with g_i addressed by
/// (round, step, i).
pub fn gumbel_argmax(scores: &[f64], beta: f64, rng: &CounterRng, round: u64, step: u32) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, s) in scores.iter().enumerate() {
        let k = beta * s + rng.gumbel(round, step, i as u64);
        if k > best.1 {
            best = (i, k);
        }
    }
    best.0
}
