//! Live sessions: the act → feedback → update loop for one user at a time.
//!
//! A [`Session`] owns its learner. The [`Engine`] holds the read-only corpus
//! and aspect data plus the summarizer and does the work for every request,
//! using the same round planner as the batch simulation.

use std::collections::BTreeMap;

use prefer_core::catalog::{Catalog, CatalogError};
use prefer_core::preference::{alignment_metrics, Alignment, PreferenceConfig, PreferenceState, ProfileConfig};
use prefer_core::selection::SelectionConfig;
use prefer_core::simplex::AspectVector;
use prefer_core::simulation::{plan_round, product_for_round, FeedbackOracle, OracleConfig, SimulationError};
use prefer_core::summarizer::{Bin, Summarizer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("unknown product {0}")]
    UnknownProduct(String),
    #[error("invalid session config: {0}")]
    BadConfig(String),
    #[error("{0}")]
    Conflict(String),
    #[error("feedback must lie in [0, 1], got {0}")]
    FeedbackOutOfRange(f64),
    #[error("corrupt session log for {session}: {message}")]
    CorruptLog { session: String, message: String },
    #[error("state store: {0}")]
    Store(#[from] std::io::Error),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

impl From<CatalogError> for ServiceError {
    fn from(e: CatalogError) -> Self {
        match e {
            CatalogError::UnknownProduct(p) => Self::UnknownProduct(p),
            other => Self::Simulation(other.into()),
        }
    }
}

pub type Result<T> = std::result::Result<T, ServiceError>;

/// Body of `POST /sessions`. Everything has a default.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    /// Rotation order; empty means every product in id order.
    pub products: Vec<String>,
    pub selection: SelectionConfig,
    pub profile: ProfileConfig,
    pub preference: PreferenceConfig,
    /// Noise stream of the demo oracle; defaults to the selection seed.
    pub oracle_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceView {
    pub sentence_id: usize,
    pub user_id: String,
    pub text: String,
    pub dominant_aspect: usize,
    pub phi: AspectVector,
    pub score: f64,
}

/// What the user is shown for one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryView {
    pub summary_id: String,
    pub round: u64,
    pub product: String,
    #[serde(rename = "final")]
    pub final_text: String,
    pub bin_summaries: BTreeMap<Bin, String>,
    pub evidence: Vec<EvidenceView>,
    pub z: AspectVector,
    /// Estimate the evidence was selected with.
    pub w_hat: AspectVector,
    pub g_cos: f64,
    pub degraded: bool,
    /// Demo mode only: alignment against the hidden target.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alignment: Option<Alignment>,
    /// Demo mode only: what the oracle would answer.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub oracle_f: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub round: u64,
    pub summary_id: String,
    pub f: f64,
    pub baseline: f64,
    pub f_tilde: f64,
    pub eta: f64,
    pub w_hat: AspectVector,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub a_pref: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub a_evid: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub config: SessionConfig,
    pub products: Vec<String>,
    pub preference: PreferenceState,
    pub pending: Option<SummaryView>,
    pub history: Vec<HistoryEntry>,
    pub created_at: u64,
}

impl Session {
    /// Round of the next (or pending) summary.
    pub fn round(&self) -> u64 {
        self.preference.round
    }

    fn oracle_seed(&self) -> u64 {
        self.config.oracle_seed.unwrap_or(self.config.selection.seed)
    }
}

/// Reply to an accepted rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackView {
    pub session_id: String,
    /// Round of the next summary.
    pub round: u64,
    pub f_tilde: f64,
    pub baseline: f64,
    pub w_hat: AspectVector,
    pub entry: HistoryEntry,
}

pub fn summary_id(session_id: &str, round: u64) -> String {
    format!("{session_id}-r{round}")
}

/// Shared read-only state behind every session.
#[derive(Debug)]
pub struct Engine {
    pub catalog: Catalog,
    pub summarizer: Summarizer,
    pub demo: Option<OracleConfig>,
}

impl Engine {
    pub fn new(catalog: Catalog, summarizer: Summarizer, demo: Option<OracleConfig>) -> Result<Self> {
        if catalog.k == 0 {
            return Err(ServiceError::BadConfig("catalog has no aspects".into()));
        }
        if let Some(cfg) = &demo {
            FeedbackOracle::from_config(cfg, catalog.k, 0)?;
        }
        Ok(Self {
            catalog,
            summarizer,
            demo,
        })
    }

    pub fn k(&self) -> usize {
        self.catalog.k
    }

    /// Product ids with their sentence counts, in id order.
    pub fn products(&self) -> Vec<(String, usize)> {
        self.catalog
            .tables
            .product_ids()
            .map(|p| {
                let n = self.catalog.tables.product_sentences(p).map_or(0, <[usize]>::len);
                (p.to_string(), n)
            })
            .collect()
    }

    fn oracle(&self, seed: u64) -> Result<Option<FeedbackOracle>> {
        match &self.demo {
            Some(cfg) => Ok(Some(FeedbackOracle::from_config(cfg, self.k(), seed)?)),
            None => Ok(None),
        }
    }

    /// Validates the config and starts a learner at the uniform estimate.
    pub fn create(&self, session_id: String, config: SessionConfig, created_at: u64) -> Result<Session> {
        let products = if config.products.is_empty() {
            self.products().into_iter().map(|(p, _)| p).collect()
        } else {
            if let Some(missing) = config.products.iter().find(|p| !self.catalog.has_product(p)) {
                return Err(ServiceError::UnknownProduct(missing.clone()));
            }
            config.products.clone()
        };
        if products.is_empty() {
            return Err(ServiceError::BadConfig("corpus has no products".into()));
        }
        config
            .selection
            .validate()
            .map_err(|e| ServiceError::BadConfig(e.to_string()))?;
        let preference = PreferenceState::new(self.k(), config.preference.clone())
            .map_err(|e| ServiceError::BadConfig(e.to_string()))?;
        Ok(Session {
            session_id,
            config,
            products,
            preference,
            pending: None,
            history: Vec::new(),
            created_at,
        })
    }

    /// The pending summary, or a freshly planned one for the current round.
    /// The returned flag is true when a new summary was issued.
    pub fn next_summary(&self, session: &Session) -> Result<(SummaryView, bool)> {
        if let Some(p) = &session.pending {
            return Ok((p.clone(), false));
        }
        let round = session.round();
        let product = product_for_round(&session.products, round).to_string();
        let candidates = self.catalog.candidates(&product)?;
        let w_hat = &session.preference.w_hat;
        let plan = plan_round(
            &self.catalog,
            &candidates,
            w_hat,
            &session.config.selection,
            &session.config.profile,
            round,
        )?;
        let items = self.catalog.evidence_items(&plan.selected).map_err(SimulationError::from)?;
        let summary = self
            .summarizer
            .summarize(&items, w_hat, plan.z())
            .map_err(SimulationError::from)?;
        let evidence = plan
            .selected
            .picks
            .iter()
            .zip(items)
            .map(|(pick, item)| EvidenceView {
                sentence_id: item.sentence_id,
                user_id: item.user_id,
                text: item.text,
                dominant_aspect: item.phi.argmax(),
                phi: item.phi,
                score: pick.score,
            })
            .collect();

        let (alignment, oracle_f) = match self.oracle(session.oracle_seed())? {
            Some(oracle) => {
                let w_true = oracle.w_true(round);
                let a = alignment_metrics(&w_true, w_hat, plan.z()).map_err(SimulationError::from)?;
                (Some(a), Some(oracle.feedback(round, plan.z())?))
            }
            None => (None, None),
        };
        let view = SummaryView {
            summary_id: summary_id(&session.session_id, round),
            round,
            product,
            final_text: summary.final_text,
            bin_summaries: summary.bin_summaries,
            evidence,
            z: plan.z().clone(),
            w_hat: w_hat.clone(),
            g_cos: summary.g_cos,
            degraded: summary.degraded,
            alignment,
            oracle_f,
        };
        Ok((view, true))
    }

    /// Marks `view` as the summary awaiting feedback.
    pub fn issue(&self, session: &mut Session, view: SummaryView) -> Result<()> {
        if session.pending.is_some() {
            return Err(ServiceError::Conflict("a summary is already pending".into()));
        }
        if view.round != session.round() || view.summary_id != summary_id(&session.session_id, session.round()) {
            return Err(ServiceError::Conflict(format!(
                "summary {} does not belong to round {}",
                view.summary_id,
                session.round()
            )));
        }
        session.pending = Some(view);
        Ok(())
    }

    /// Centers the rating, takes one OMD step on the pending summary's
    /// profile and clears it.
    pub fn submit(&self, session: &mut Session, summary_id: &str, f: f64) -> Result<FeedbackView> {
        if !(0.0..=1.0).contains(&f) {
            return Err(ServiceError::FeedbackOutOfRange(f));
        }
        let pending = match &session.pending {
            Some(p) if p.summary_id == summary_id => p,
            Some(p) => {
                return Err(ServiceError::Conflict(format!(
                    "summary {summary_id} is stale; pending summary is {}",
                    p.summary_id
                )))
            }
            None if session.history.iter().any(|h| h.summary_id == summary_id) => {
                return Err(ServiceError::Conflict(format!("summary {summary_id} was already rated")))
            }
            None => return Err(ServiceError::Conflict(format!("no pending summary {summary_id}"))),
        };
        let z = pending.z.clone();
        let round = session.round();
        let oracle = self.oracle(session.oracle_seed())?;
        let step = session
            .preference
            .observe(f, &z)
            .map_err(SimulationError::from)?;
        let (a_pref, a_evid) = match oracle {
            Some(o) => {
                let a = alignment_metrics(&o.w_true(round), &step.w_post, &z).map_err(SimulationError::from)?;
                (Some(a.a_pref), Some(a.a_evid))
            }
            None => (None, None),
        };
        let entry = HistoryEntry {
            round,
            summary_id: summary_id.to_string(),
            f,
            baseline: step.centered.baseline,
            f_tilde: step.centered.f_tilde,
            eta: step.eta,
            w_hat: step.w_post.clone(),
            a_pref,
            a_evid,
        };
        session.history.push(entry.clone());
        session.pending = None;
        Ok(FeedbackView {
            session_id: session.session_id.clone(),
            round: session.round(),
            f_tilde: step.centered.f_tilde,
            baseline: session.preference.baseline,
            w_hat: step.w_post,
            entry,
        })
    }
}
