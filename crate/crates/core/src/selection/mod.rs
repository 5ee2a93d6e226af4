//! Budgeted evidence extraction.
//!
//! Both extractors run the same greedy loop over a product's sentences. At
//! each step the feasible candidates are scored with
//! a(j) = λ·ŵᵀφ_j − (1−λ)·m(j), where m(j) caches the largest similarity
//! between j and the sentences picked so far (floored at zero). The
//! deterministic extractor takes the argmax; the Gumbel extractor takes the
//! argmax of β·a(j) + g_j.

mod greedy;
mod verify;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simplex::{self, AspectVector, SimplexError};

pub use greedy::{boltzmann_probabilities, gumbel_argmax, select, select_gumbel, select_mmr};
pub use verify::{marginal_gain, mmr_score, objective, redundancy};

#[derive(Debug, Error, PartialEq)]
pub enum SelectionError {
    #[error("no candidate sentences")]
    EmptyCandidates,
    #[error("sentence {sentence_id}: {source}")]
    Candidate {
        sentence_id: usize,
        source: SimplexError,
    },
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error("invalid selection config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceCandidate {
    pub sentence_id: usize,
    pub phi: AspectVector,
    /// Reduced PCA coordinates used by the similarity kernel.
    pub reduced: Vec<f64>,
    pub token_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    #[default]
    Deterministic,
    Gumbel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub lambda: f64,
    pub max_sentences: usize,
    pub max_tokens: Option<usize>,
    pub mode: SelectionMode,
    pub beta0: f64,
    pub c_beta: f64,
    pub beta_max: f64,
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            lambda: 0.7,
            max_sentences: 8,
            max_tokens: None,
            mode: SelectionMode::Deterministic,
            beta0: 1.0,
            c_beta: 2.0,
            beta_max: 50.0,
            seed: 0,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<(), SelectionError> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(SelectionError::BadConfig(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        if self.max_sentences == 0 {
            return Err(SelectionError::BadConfig("max_sentences must be at least 1".into()));
        }
        if !(self.beta_max >= 1.0) || !(self.beta0 >= 1.0) || !(self.c_beta >= 0.0) {
            return Err(SelectionError::BadConfig(format!(
                "need beta0 >= 1, beta_max >= 1 and c_beta >= 0, got {}, {}, {}",
                self.beta0, self.beta_max, self.c_beta
            )));
        }
        Ok(())
    }

    /// Inverse temperature at round t: min{β_max, β₀ + c_β·log(t + 2)}.
    pub fn beta_at(&self, round_t: u64) -> f64 {
        beta_schedule(self.beta0, self.c_beta, self.beta_max, round_t)
    }
}

pub fn beta_schedule(beta0: f64, c_beta: f64, beta_max: f64, round_t: u64) -> f64 {
    beta_max.min(beta0 + c_beta * (round_t as f64 + 2.0).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pick {
    pub sentence_id: usize,
    /// Unperturbed marginal score a(j) at the step it was picked.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedEvidence {
    pub picks: Vec<Pick>,
    pub total_tokens: usize,
    pub aspect_profile: Option<AspectVector>,
}

impl SelectedEvidence {
    pub fn sentence_ids(&self) -> Vec<usize> {
        self.picks.iter().map(|p| p.sentence_id).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.picks.is_empty()
    }

    pub fn len(&self) -> usize {
        self.picks.len()
    }
}

/// Rel = ŵᵀφ.
pub fn relevance(w_hat: &AspectVector, phi: &AspectVector) -> Result<f64, SelectionError> {
    Ok(w_hat.dot(phi)?)
}

/// Cosine similarity of two reduced sentence vectors.
pub fn similarity(a: &[f64], b: &[f64]) -> Result<f64, SelectionError> {
    Ok(simplex::cosine(a, b)?)
}
