//! Controlled experiments: a synthetic feedback oracle, preference drift,
//! the interaction loop over rounds, seeds and arms, and result files.

mod compare;
mod experiment;
mod oracle;
mod plot;
mod round;
mod synth;

use thiserror::Error;

pub use compare::{compare_profiles, jaccard, HeterogeneityReport, NamedProfile, ProfileOutcome, ProfileOverlap};
pub use experiment::{
    aggregate, load_catalog, run_experiment, run_on_catalog, write_outputs, AggregateRow, Arm, ArmRun, BoundConfig,
    DataSource, ExperimentConfig, ExperimentResult, RoundRow, METRIC_COLUMNS,
};
pub use oracle::{logistic, DriftSchedule, FeedbackOracle, OracleConfig, Target, TargetSpec};
pub use plot::{plot_csv, render_svg, Series};
pub use round::{plan_round, product_for_round, RoundPlan};
pub use synth::{product_id, synthetic_catalog, synthetic_corpus, SynthConfig, SyntheticCorpus};

use crate::aspect::AspectError;
use crate::catalog::CatalogError;
use crate::corpus::CorpusError;
use crate::preference::PreferenceError;
use crate::selection::SelectionError;
use crate::simplex::SimplexError;
use crate::summarizer::SummaryError;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("product {product} has {available} sentences, fewer than k={k}")]
    TooFewSentences { product: String, available: usize, k: usize },
    #[error("round {round}: nothing fits the selection budget")]
    EmptySelection { round: u64 },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Preference(#[from] PreferenceError),
    #[error(transparent)]
    Summary(#[from] SummaryError),
    #[error(transparent)]
    Aspect(#[from] AspectError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("plot: {0}")]
    Plot(String),
}

impl SimulationError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        SimulationError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
