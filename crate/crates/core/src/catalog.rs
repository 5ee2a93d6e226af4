//! Per-sentence aspect data joined with the corpus, ready for selection.

use thiserror::Error;

use crate::aspect::{AspectError, AspectModel, EmbeddingMatrix};
use crate::corpus::CorpusTables;
use crate::selection::{EvidenceCandidate, SelectedEvidence};
use crate::simplex::AspectVector;
use crate::summarizer::EvidenceItem;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown product {0}")]
    UnknownProduct(String),
    #[error("{rows} embedding rows for {sentences} sentences")]
    RowCount { rows: usize, sentences: usize },
    #[error("no sentence {0}")]
    UnknownSentence(usize),
    #[error(transparent)]
    Aspect(#[from] AspectError),
}

/// Corpus plus φ and reduced coordinates indexed by sentence id.
#[derive(Debug, Clone)]
pub struct Catalog {
    pub tables: CorpusTables,
    pub phi: Vec<AspectVector>,
    pub reduced: Vec<Vec<f64>>,
    pub k: usize,
}

impl Catalog {
    /// Projects and soft-assigns every sentence embedding with a frozen model.
    pub fn from_model(tables: CorpusTables, model: &AspectModel, emb: &EmbeddingMatrix) -> Result<Self, CatalogError> {
        if emb.rows() != tables.sentences.len() {
            return Err(CatalogError::RowCount {
                rows: emb.rows(),
                sentences: tables.sentences.len(),
            });
        }
        let mut phi = Vec::with_capacity(emb.rows());
        let mut reduced = Vec::with_capacity(emb.rows());
        for (i, row) in emb.iter_rows().enumerate() {
            let r = model.reduce(row).map_err(|e| match e {
                AspectError::ZeroRow { .. } => AspectError::ZeroRow { row: i },
                AspectError::NonFinite { .. } => AspectError::NonFinite { row: i },
                other => other,
            })?;
            phi.push(model.assign_reduced(&r));
            reduced.push(r);
        }
        Ok(Self::from_parts(tables, phi, reduced))
    }

    pub fn from_parts(tables: CorpusTables, phi: Vec<AspectVector>, reduced: Vec<Vec<f64>>) -> Self {
        let k = phi.first().map(AspectVector::dim).unwrap_or(0);
        Self {
            tables,
            phi,
            reduced,
            k,
        }
    }

    pub fn has_product(&self, product_id: &str) -> bool {
        self.tables.product_sentences(product_id).is_some()
    }

    pub fn candidates(&self, product_id: &str) -> Result<Vec<EvidenceCandidate>, CatalogError> {
        let ids = self
            .tables
            .product_sentences(product_id)
            .ok_or_else(|| CatalogError::UnknownProduct(product_id.to_string()))?;
        Ok(ids
            .iter()
            .map(|&id| EvidenceCandidate {
                sentence_id: id,
                phi: self.phi[id].clone(),
                reduced: self.reduced[id].clone(),
                token_count: self.tables.sentences[id].token_count,
            })
            .collect())
    }

    pub fn phi_of(&self, sentence_id: usize) -> Option<&AspectVector> {
        self.phi.get(sentence_id)
    }

    /// Summarizer inputs for a selection, in extraction order.
    pub fn evidence_items(&self, selected: &SelectedEvidence) -> Result<Vec<EvidenceItem>, CatalogError> {
        selected
            .picks
            .iter()
            .map(|p| {
                let s = self
                    .tables
                    .sentence(p.sentence_id)
                    .ok_or(CatalogError::UnknownSentence(p.sentence_id))?;
                Ok(EvidenceItem {
                    sentence_id: p.sentence_id,
                    user_id: s.user_id.clone(),
                    text: s.text.clone(),
                    phi: self.phi[p.sentence_id].clone(),
                })
            })
            .collect()
    }
}
