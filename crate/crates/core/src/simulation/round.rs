//! One act step of the interaction loop, shared by simulations and live sessions.

use super::SimulationError;
use crate::catalog::Catalog;
use crate::preference::{aspect_profile, AspectProfile, ProfileConfig};
use crate::selection::{select, EvidenceCandidate, SelectedEvidence, SelectionConfig};
use crate::simplex::AspectVector;

/// Round-robin product rotation; `round_t` is 1-based.
pub fn product_for_round(products: &[String], round_t: u64) -> &str {
    let n = products.len() as u64;
    &products[((round_t - 1) % n) as usize]
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundPlan {
    pub selected: SelectedEvidence,
    pub profile: AspectProfile,
}

impl RoundPlan {
    pub fn z(&self) -> &AspectVector {
        &self.profile.z
    }
}

/// Selects evidence with the current estimate and builds its aspect profile.
pub fn plan_round(
    catalog: &Catalog,
    candidates: &[EvidenceCandidate],
    w_hat: &AspectVector,
    selection: &SelectionConfig,
    profile: &ProfileConfig,
    round_t: u64,
) -> Result<RoundPlan, SimulationError> {
    let mut selected = select(candidates, w_hat, selection, round_t)?;
    if selected.is_empty() {
        return Err(SimulationError::EmptySelection { round: round_t });
    }
    let profile = aspect_profile(&selected, |id| catalog.phi_of(id), profile)?;
    selected.aspect_profile = Some(profile.z.clone());
    Ok(RoundPlan { selected, profile })
}
