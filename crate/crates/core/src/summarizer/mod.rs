//! Hierarchical summaries of selected evidence.
//!
//! Stage 1 groups the picks by the reviewer support of their dominant
//! aspect (HIGH/MID/LOW) and compresses each group, stage 2 stitches the
//! groups into a draft, and stage 3 polishes the draft. Each stage goes
//! through an optional text generator; a deterministic template stub is used
//! when none is configured or when a call fails.

mod bins;
mod http;
mod prompts;
mod stub;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simplex::{self, AspectVector, SimplexError};

pub use bins::{bin_by_support, quantile, SupportBins};
pub use http::{HttpRewriter, RewriterEndpoint};
pub use prompts::{render_compress, render_polish, render_stitch, PROMPT_VERSION};
pub use stub::{normalize_for_dedup, stub_compress, stub_polish, stub_stitch, STUB_MAX_TOKENS};

#[derive(Debug, Error)]
pub enum SummaryError {
    #[error("nothing was selected")]
    EmptySelection,
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

#[derive(Debug, Error)]
pub enum RewriteError {
    #[error("request failed: {0}")]
    Transport(String),
    #[error("endpoint returned no text")]
    EmptyText,
    #[error("API key variable {0} is not set")]
    MissingKey(String),
    #[error("invalid endpoint: {0}")]
    BadEndpoint(String),
}

/// Something that turns a prompt into text.
pub trait TextGenerator: Send + Sync {
    fn generate(&self, prompt: &str) -> Result<String, RewriteError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bin {
    High,
    Mid,
    Low,
}

impl Bin {
    pub const ALL: [Bin; 3] = [Bin::High, Bin::Mid, Bin::Low];

    pub fn label(self) -> &'static str {
        match self {
            Bin::High => "HIGH",
            Bin::Mid => "MID",
            Bin::Low => "LOW",
        }
    }
}

/// One selected sentence with what the summarizer needs to know about it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub sentence_id: usize,
    pub user_id: String,
    pub text: String,
    pub phi: AspectVector,
}

/// Share of the selection that landed in a bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub count: usize,
    pub pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryArtifact {
    pub bins: SupportBins,
    pub bin_summaries: BTreeMap<Bin, String>,
    pub draft: String,
    #[serde(rename = "final")]
    pub final_text: String,
    pub provenance: BTreeMap<Bin, Vec<usize>>,
    pub g_cos: f64,
    /// Set when any stage fell back to the stub after a generator failure.
    pub degraded: bool,
    pub prompt_version: String,
}

/// G_cos(ŵ, z) = ŵᵀz / (‖ŵ‖‖z‖).
pub fn g_cos(w_hat: &AspectVector, z: &AspectVector) -> Result<f64, SimplexError> {
    simplex::cosine(w_hat.as_slice(), z.as_slice())
}

#[derive(Clone, Default)]
pub struct Summarizer {
    generator: Option<Arc<dyn TextGenerator>>,
}

impl std::fmt::Debug for Summarizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Summarizer")
            .field("generator", &self.generator.as_ref().map(|_| "configured"))
            .finish()
    }
}

impl Summarizer {
    pub fn stub() -> Self {
        Self::default()
    }

    pub fn with_generator(generator: Arc<dyn TextGenerator>) -> Self {
        Self {
            generator: Some(generator),
        }
    }

    pub fn summarize(
        &self,
        items: &[EvidenceItem],
        w_hat: &AspectVector,
        z: &AspectVector,
    ) -> Result<SummaryArtifact, SummaryError> {
        let bins = bin_by_support(items)?;
        let by_id: BTreeMap<usize, &EvidenceItem> = items.iter().map(|i| (i.sentence_id, i)).collect();
        let texts = |ids: &[usize]| -> Vec<String> { ids.iter().map(|id| by_id[id].text.clone()).collect() };

        let mut provenance = BTreeMap::new();
        let mut stats = BTreeMap::new();
        for bin in Bin::ALL {
            let ids = bins.members(bin);
            if !ids.is_empty() {
                provenance.insert(bin, ids.to_vec());
                stats.insert(
                    bin,
                    BinStats {
                        count: ids.len(),
                        pct: 100.0 * ids.len() as f64 / items.len() as f64,
                    },
                );
            }
        }

        let (bin_summaries, mut degraded) = self.compress_bins(&provenance, &texts);
        let (draft, final_text, later) = self.stitch_and_polish(&bin_summaries, &stats);
        degraded |= later;

        Ok(SummaryArtifact {
            bins,
            bin_summaries,
            draft,
            final_text,
            provenance,
            g_cos: g_cos(w_hat, z)?,
            degraded,
            prompt_version: PROMPT_VERSION.to_string(),
        })
    }

    /// Stage 1 for every non-empty bin. Generator calls run concurrently.
    pub fn compress_bins<F>(&self, provenance: &BTreeMap<Bin, Vec<usize>>, texts: &F) -> (BTreeMap<Bin, String>, bool)
    where
        F: Fn(&[usize]) -> Vec<String> + Sync,
    {
        let Some(generator) = &self.generator else {
            let out = provenance
                .iter()
                .map(|(&bin, ids)| (bin, stub_compress(&texts(ids))))
                .collect();
            return (out, false);
        };
        let results: Vec<(Bin, String, bool)> = std::thread::scope(|scope| {
            let handles: Vec<_> = provenance
                .iter()
                .map(|(&bin, ids)| {
                    let evidence = texts(ids);
                    scope.spawn(move || match generator.generate(&render_compress(&evidence)) {
                        Ok(text) => (bin, text, false),
                        Err(_) => (bin, stub_compress(&evidence), true),
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("rewriter thread")).collect()
        });
        let degraded = results.iter().any(|r| r.2);
        (results.into_iter().map(|(b, t, _)| (b, t)).collect(), degraded)
    }

    /// Stages 2 and 3. Returns (draft, final, degraded).
    pub fn stitch_and_polish(
        &self,
        bin_summaries: &BTreeMap<Bin, String>,
        stats: &BTreeMap<Bin, BinStats>,
    ) -> (String, String, bool) {
        let Some(generator) = &self.generator else {
            let draft = stub_stitch(bin_summaries);
            let final_text = stub_polish(&draft);
            return (draft, final_text, false);
        };
        let mut degraded = false;
        let draft = match generator.generate(&render_stitch(bin_summaries, stats)) {
            Ok(d) => d,
            Err(_) => {
                degraded = true;
                stub_stitch(bin_summaries)
            }
        };
        let final_text = match generator.generate(&render_polish(&draft)) {
            Ok(f) => f,
            Err(_) => {
                degraded = true;
                stub_polish(&draft)
            }
        };
        (draft, final_text, degraded)
    }
}
