//! Aspect profile z of a selection: a convex combination of the picks' φ.

use serde::{Deserialize, Serialize};

use super::PreferenceError;
use crate::selection::SelectedEvidence;
use crate::simplex::AspectVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    #[default]
    Uniform,
    /// α_i ∝ exp(β_α·a_i)
    Util,
    /// α_i ∝ exp(−γ_α·(i−1))
    Rank,
    /// α_i ∝ exp(β_α·a_i − γ_α·(i−1))
    Blend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileConfig {
    pub scheme: WeightScheme,
    pub beta_alpha: f64,
    pub gamma_alpha: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            scheme: WeightScheme::Uniform,
            beta_alpha: 1.0,
            gamma_alpha: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectProfile {
    pub z: AspectVector,
    /// α in extraction order.
    pub weights: Vec<f64>,
    pub scheme: WeightScheme,
    pub beta_alpha: f64,
    pub gamma_alpha: f64,
}

pub fn aspect_profile<'a, F>(
    selected: &SelectedEvidence,
    phi: F,
    cfg: &ProfileConfig,
) -> Result<AspectProfile, PreferenceError>
where
    F: Fn(usize) -> Option<&'a AspectVector>,
{
    if selected.picks.is_empty() {
        return Err(PreferenceError::EmptySelection);
    }
    let (beta, gamma) = (cfg.beta_alpha, cfg.gamma_alpha);
    let logits: Vec<f64> = selected
        .picks
        .iter()
        .enumerate()
        .map(|(i, p)| match cfg.scheme {
            WeightScheme::Uniform => 0.0,
            WeightScheme::Util => beta * p.score,
            WeightScheme::Rank => -gamma * i as f64,
            WeightScheme::Blend => beta * p.score - gamma * i as f64,
        })
        .collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.into_iter().map(|x| x / total).collect();

    let mut z: Vec<f64> = Vec::new();
    for (pick, a) in selected.picks.iter().zip(&weights) {
        let p = phi(pick.sentence_id).ok_or(PreferenceError::UnknownSentence(pick.sentence_id))?;
        if z.is_empty() {
            z = vec![0.0; p.dim()];
        }
        if p.dim() != z.len() {
            return Err(crate::simplex::SimplexError::DimensionMismatch {
                left: z.len(),
                right: p.dim(),
            }
            .into());
        }
        for (zk, pk) in z.iter_mut().zip(p.as_slice()) {
            *zk += a * pk;
        }
    }
    Ok(AspectProfile {
        z: AspectVector::from_weights(z)?,
        weights,
        scheme: cfg.scheme,
        beta_alpha: beta,
        gamma_alpha: gamma,
    })
}
