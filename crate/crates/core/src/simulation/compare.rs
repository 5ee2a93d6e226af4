//! Evidence and summaries for several target profiles on one product.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::round::plan_round;
use super::SimulationError;
use crate::catalog::Catalog;
use crate::preference::ProfileConfig;
use crate::selection::SelectionConfig;
use crate::simplex::AspectVector;
use crate::summarizer::{g_cos, SummaryArtifact, Summarizer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedProfile {
    pub name: String,
    pub w: AspectVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileOutcome {
    pub name: String,
    pub w: AspectVector,
    pub sentence_ids: Vec<usize>,
    pub z: AspectVector,
    pub g_cos: f64,
    pub summary: SummaryArtifact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileOverlap {
    pub left: String,
    pub right: String,
    pub jaccard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityReport {
    pub product: String,
    pub outcomes: Vec<ProfileOutcome>,
    pub overlaps: Vec<ProfileOverlap>,
}

/// |A ∩ B| / |A ∪ B|; two empty sets count as identical.
pub fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let a: BTreeSet<usize> = a.iter().copied().collect();
    let b: BTreeSet<usize> = b.iter().copied().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// One selection and summary per profile at round 1, then G_cos(w, z) for
/// each and the evidence Jaccard for every pair.
pub fn compare_profiles(
    catalog: &Catalog,
    product: &str,
    profiles: &[NamedProfile],
    selection: &SelectionConfig,
    profile_cfg: &ProfileConfig,
    summarizer: &Summarizer,
) -> Result<HeterogeneityReport, SimulationError> {
    let candidates = catalog.candidates(product)?;
    if candidates.len() < selection.max_sentences {
        return Err(SimulationError::TooFewSentences {
            product: product.to_string(),
            available: candidates.len(),
            k: selection.max_sentences,
        });
    }
    let mut outcomes = Vec::with_capacity(profiles.len());
    for p in profiles {
        if p.w.dim() != catalog.k {
            return Err(SimulationError::Config(format!(
                "profile {} has dimension {} but K={}",
                p.name,
                p.w.dim(),
                catalog.k
            )));
        }
        let plan = plan_round(catalog, &candidates, &p.w, selection, profile_cfg, 1)?;
        let items = catalog.evidence_items(&plan.selected)?;
        let summary = summarizer.summarize(&items, &p.w, plan.z())?;
        outcomes.push(ProfileOutcome {
            name: p.name.clone(),
            w: p.w.clone(),
            sentence_ids: plan.selected.sentence_ids(),
            z: plan.z().clone(),
            g_cos: g_cos(&p.w, plan.z())?,
            summary,
        });
    }
    let mut overlaps = Vec::new();
    for i in 0..outcomes.len() {
        for j in i + 1..outcomes.len() {
            overlaps.push(ProfileOverlap {
                left: outcomes[i].name.clone(),
                right: outcomes[j].name.clone(),
                jaccard: jaccard(&outcomes[i].sentence_ids, &outcomes[j].sentence_ids),
            });
        }
    }
    Ok(HeterogeneityReport {
        product: product.to_string(),
        outcomes,
        overlaps,
    })
}
