//! The interaction loop over rounds, seeds and arms, and its result files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::oracle::{FeedbackOracle, OracleConfig, Target};
use super::round::{plan_round, product_for_round};
use super::synth::{synthetic_catalog, SynthConfig};
use super::SimulationError;
use crate::aspect::{AspectModel, EmbeddingMatrix};
use crate::catalog::Catalog;
use crate::corpus::load_tables;
use crate::preference::{
    alignment_metrics, dynamic_bound, optimized_eta0, surrogate_loss, BoundParams, PreferenceConfig,
    PreferenceState, ProfileConfig, RegretLedger, RegretRecord,
};
use crate::selection::{EvidenceCandidate, SelectionConfig, SelectionMode};
use crate::summarizer::Summarizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arm {
    StaticMmr,
    StaticGumbel,
    PreferMmr,
    PreferGumbel,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::StaticMmr, Arm::StaticGumbel, Arm::PreferMmr, Arm::PreferGumbel];

    pub fn name(self) -> &'static str {
        match self {
            Arm::StaticMmr => "static-mmr",
            Arm::StaticGumbel => "static-gumbel",
            Arm::PreferMmr => "prefer-mmr",
            Arm::PreferGumbel => "prefer-gumbel",
        }
    }

    pub fn adaptive(self) -> bool {
        matches!(self, Arm::PreferMmr | Arm::PreferGumbel)
    }

    pub fn mode(self) -> SelectionMode {
        match self {
            Arm::StaticMmr | Arm::PreferMmr => SelectionMode::Deterministic,
            Arm::StaticGumbel | Arm::PreferGumbel => SelectionMode::Gumbel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Synthetic(SynthConfig),
    Files {
        corpus: PathBuf,
        model: PathBuf,
        embeddings: PathBuf,
    },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic(SynthConfig::default())
    }
}

/// Constants of the reported bound. c_η and η₀ come from the learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundConfig {
    pub c: f64,
    pub delta: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self { c: 1.0, delta: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub data: DataSource,
    /// Rotation order; empty means every product in id order.
    pub products: Vec<String>,
    /// `mode` and `seed` are overridden per arm and seed.
    pub selection: SelectionConfig,
    pub preference: PreferenceConfig,
    pub profile: ProfileConfig,
    pub oracle: OracleConfig,
    pub bound: BoundConfig,
    /// Replace `preference.eta0` with the η₀ minimizing the static bound.
    pub optimize_eta0: bool,
    pub rounds: u64,
    pub seeds: Vec<u64>,
    pub arms: Vec<Arm>,
    /// Run the (stub) summarizer every round, as a live session would.
    pub summarize: bool,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::default(),
            products: Vec::new(),
            selection: SelectionConfig::default(),
            preference: PreferenceConfig::default(),
            profile: ProfileConfig::default(),
            oracle: OracleConfig::default(),
            bound: BoundConfig::default(),
            optimize_eta0: false,
            rounds: 100,
            seeds: (0..10).collect(),
            arms: Arm::ALL.to_vec(),
            summarize: true,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, SimulationError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimulationError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| SimulationError::Config(format!("{}: {e}", path.display())))
    }

    /// The learner configuration actually used by the adaptive arms.
    pub fn effective_preference(&self) -> PreferenceConfig {
        let mut p = self.preference.clone();
        if self.optimize_eta0 {
            p.eta0 = optimized_eta0(self.bound.c, self.bound.delta, p.c_eta);
        }
        p
    }

    pub fn bound_params(&self) -> BoundParams {
        let p = self.effective_preference();
        BoundParams {
            c: self.bound.c,
            delta: self.bound.delta,
            c_eta: p.c_eta,
            eta0: p.eta0,
        }
    }

    /// Selection settings for one arm and seed.
    pub fn selection_for(&self, arm: Arm, seed: u64) -> SelectionConfig {
        let mut s = self.selection.clone();
        s.mode = arm.mode();
        s.seed = seed;
        s
    }

    fn resolve_products(&self, catalog: &Catalog) -> Result<Vec<String>, SimulationError> {
        if self.products.is_empty() {
            let all: Vec<String> = catalog.tables.product_ids().map(str::to_string).collect();
            if all.is_empty() {
                return Err(SimulationError::Config("corpus has no products".into()));
            }
            return Ok(all);
        }
        if let Some(missing) = self.products.iter().find(|p| !catalog.has_product(p)) {
            return Err(crate::catalog::CatalogError::UnknownProduct(missing.clone()).into());
        }
        Ok(self.products.clone())
    }
}

/// One CSV line: a round of one arm under one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    pub round: u64,
    pub arm: Arm,
    pub seed: u64,
    pub product: String,
    pub f: f64,
    pub b: f64,
    pub f_tilde: f64,
    pub loss: f64,
    pub loss_comparator: f64,
    pub regret_cum: f64,
    pub regret_avg: f64,
    pub bound_avg: f64,
    pub a_pref: f64,
    pub a_evid: f64,
    pub min_coord_pre: f64,
    pub min_coord_post: f64,
    pub v_t: f64,
    /// ŵ after the round's update.
    pub w: Vec<f64>,
    pub sentence_ids: Vec<usize>,
}

pub const METRIC_COLUMNS: [&str; 13] = [
    "f",
    "b",
    "f_tilde",
    "loss",
    "loss_comparator",
    "regret_cum",
    "regret_avg",
    "bound_avg",
    "A_pref",
    "A_evid",
    "min_coord_pre",
    "min_coord_post",
    "V_T",
];

impl RoundRow {
    pub fn metrics(&self) -> [f64; 13] {
        [
            self.f,
            self.b,
            self.f_tilde,
            self.loss,
            self.loss_comparator,
            self.regret_cum,
            self.regret_avg,
            self.bound_avg,
            self.a_pref,
            self.a_evid,
            self.min_coord_pre,
            self.min_coord_post,
            self.v_t,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmRun {
    pub arm: Arm,
    pub seed: u64,
    pub rows: Vec<RoundRow>,
    pub ledger: RegretLedger,
    /// Rounds whose summary fell back to the stub.
    pub degraded_rounds: usize,
}

impl ArmRun {
    pub fn file_name(&self) -> String {
        format!("{}_seed{}.csv", self.arm.name(), self.seed)
    }

    pub fn final_row(&self) -> &RoundRow {
        self.rows.last().expect("at least one round")
    }
}

/// Across-seed mean, min and max of every metric for one arm and round.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub round: u64,
    pub arm: Arm,
    pub seeds: usize,
    pub mean: [f64; 13],
    pub min: [f64; 13],
    pub max: [f64; 13],
}

impl AggregateRow {
    pub fn mean_of(&self, column: &str) -> Option<f64> {
        METRIC_COLUMNS.iter().position(|c| *c == column).map(|i| self.mean[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub k: usize,
    pub products: Vec<String>,
    pub params: BoundParams,
    pub runs: Vec<ArmRun>,
    pub aggregate: Vec<AggregateRow>,
}

impl ExperimentResult {
    pub fn run(&self, arm: Arm, seed: u64) -> Option<&ArmRun> {
        self.runs.iter().find(|r| r.arm == arm && r.seed == seed)
    }

    pub fn runs_of(&self, arm: Arm) -> impl Iterator<Item = &ArmRun> {
        self.runs.iter().filter(move |r| r.arm == arm)
    }

    pub fn aggregate_of(&self, arm: Arm) -> Vec<&AggregateRow> {
        self.aggregate.iter().filter(|r| r.arm == arm).collect()
    }
}

pub fn load_catalog(data: &DataSource) -> Result<Catalog, SimulationError> {
    match data {
        DataSource::Synthetic(cfg) => Ok(synthetic_catalog(cfg)?.0),
        DataSource::Files {
            corpus,
            model,
            embeddings,
        } => {
            let tables = load_tables(corpus)?;
            let model = AspectModel::load(model)?;
            let emb = EmbeddingMatrix::load(embeddings)?;
            Ok(Catalog::from_model(tables, &model, &emb)?)
        }
    }
}

/// Loads the data, runs every arm under every seed and writes result files
/// when an output directory is configured.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, SimulationError> {
    let catalog = load_catalog(&cfg.data)?;
    let result = run_on_catalog(&catalog, cfg)?;
    if let Some(dir) = &cfg.output_dir {
        write_outputs(&result, dir)?;
    }
    Ok(result)
}

pub fn run_on_catalog(catalog: &Catalog, cfg: &ExperimentConfig) -> Result<ExperimentResult, SimulationError> {
    if cfg.rounds == 0 {
        return Err(SimulationError::Config("rounds must be at least 1".into()));
    }
    if cfg.seeds.is_empty() || cfg.arms.is_empty() {
        return Err(SimulationError::Config("need at least one seed and one arm".into()));
    }
    let k = catalog.k;
    let products = cfg.resolve_products(catalog)?;
    let pref = cfg.effective_preference();
    pref.validate(k)?;
    let params = cfg.bound_params();
    params.validate(k)?;
    cfg.selection.validate()?;
    let target = cfg.oracle.target.resolve(k)?;
    FeedbackOracle::new(target.clone(), cfg.oracle.gamma, cfg.oracle.sigma, 0)?;

    let candidates: Vec<Vec<EvidenceCandidate>> = products
        .iter()
        .map(|p| catalog.candidates(p))
        .collect::<Result<_, _>>()?;

    let jobs: Vec<(Arm, u64)> = cfg
        .arms
        .iter()
        .flat_map(|&arm| cfg.seeds.iter().map(move |&s| (arm, s)))
        .collect();
    let runs: Vec<ArmRun> = jobs
        .par_iter()
        .map(|&(arm, seed)| {
            let job = Job {
                catalog,
                candidates: &candidates,
                products: &products,
                cfg,
                pref: &pref,
                params,
                target: &target,
            };
            job.run(arm, seed)
        })
        .collect::<Result<_, _>>()?;

    let aggregate = aggregate(&runs);
    Ok(ExperimentResult {
        k,
        products,
        params,
        runs,
        aggregate,
    })
}

struct Job<'a> {
    catalog: &'a Catalog,
    candidates: &'a [Vec<EvidenceCandidate>],
    products: &'a [String],
    cfg: &'a ExperimentConfig,
    pref: &'a PreferenceConfig,
    params: BoundParams,
    target: &'a Target,
}

impl Job<'_> {
    fn run(&self, arm: Arm, seed: u64) -> Result<ArmRun, SimulationError> {
        let selection = self.cfg.selection_for(arm, seed);
        let oracle = FeedbackOracle::new(self.target.clone(), self.cfg.oracle.gamma, self.cfg.oracle.sigma, seed)?;
        let mut state = PreferenceState::new(self.catalog.k, self.pref.clone())?;
        let mut ledger = RegretLedger::new(self.params);
        let summarizer = Summarizer::stub();
        let mut rows = Vec::with_capacity(self.cfg.rounds as usize);
        let mut degraded_rounds = 0;

        for t in 1..=self.cfg.rounds {
            let product_idx = ((t - 1) % self.products.len() as u64) as usize;
            let plan = plan_round(
                self.catalog,
                &self.candidates[product_idx],
                &state.w_hat,
                &selection,
                &self.cfg.profile,
                t,
            )?;
            let z = plan.z().clone();
            if self.cfg.summarize {
                let items = self.catalog.evidence_items(&plan.selected)?;
                if summarizer.summarize(&items, &state.w_hat, &z)?.degraded {
                    degraded_rounds += 1;
                }
            }

            let w_true = oracle.w_true(t);
            let f = oracle.feedback(t, &z)?;
            let step = if arm.adaptive() {
                state.observe(f, &z)?
            } else {
                state.observe_frozen(f, &z)?
            };
            let f_tilde = step.centered.f_tilde;
            let loss_comparator = surrogate_loss(&w_true, f_tilde, &z)?;
            ledger.push(RegretRecord {
                round: t,
                f,
                baseline: step.centered.baseline,
                f_tilde,
                loss: step.loss,
                loss_comparator,
                z: z.clone(),
                w_true: w_true.clone(),
                min_coord_pre: step.min_coord_pre,
                min_coord_post: step.min_coord_post,
            });
            let align = alignment_metrics(&w_true, &state.w_hat, &z)?;
            rows.push(RoundRow {
                round: t,
                arm,
                seed,
                product: product_for_round(self.products, t).to_string(),
                f,
                b: step.centered.baseline,
                f_tilde,
                loss: step.loss,
                loss_comparator,
                regret_cum: ledger.regret(),
                regret_avg: ledger.average_regret(),
                bound_avg: dynamic_bound(&self.params, t, ledger.path_length()) / t as f64,
                a_pref: align.a_pref,
                a_evid: align.a_evid,
                min_coord_pre: step.min_coord_pre,
                min_coord_post: step.min_coord_post,
                v_t: ledger.path_length(),
                w: state.w_hat.as_slice().to_vec(),
                sentence_ids: plan.selected.sentence_ids(),
            });
        }
        Ok(ArmRun {
            arm,
            seed,
            rows,
            ledger,
            degraded_rounds,
        })
    }
}

pub fn aggregate(runs: &[ArmRun]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(Arm, u64), Vec<&RoundRow>> = BTreeMap::new();
    let mut ordered: Vec<&ArmRun> = runs.iter().collect();
    ordered.sort_by_key(|r| (r.arm, r.seed));
    for run in ordered {
        for row in &run.rows {
            groups.entry((row.arm, row.round)).or_default().push(row);
        }
    }
    groups
        .into_iter()
        .map(|((arm, round), rows)| {
            let n = rows.len();
            let mut mean = [0.0; 13];
            let mut min = [f64::INFINITY; 13];
            let mut max = [f64::NEG_INFINITY; 13];
            for row in &rows {
                for (i, v) in row.metrics().into_iter().enumerate() {
                    mean[i] += v;
                    min[i] = min[i].min(v);
                    max[i] = max[i].max(v);
                }
            }
            mean.iter_mut().for_each(|m| *m /= n as f64);
            AggregateRow {
                round,
                arm,
                seeds: n,
                mean,
                min,
                max,
            }
        })
        .collect()
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn run_csv(run: &ArmRun, k: usize) -> Result<Vec<u8>, SimulationError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["round", "arm", "seed"].iter().map(|s| s.to_string()).collect();
    header.extend(METRIC_COLUMNS.iter().map(|s| s.to_string()));
    header.extend((0..k).map(|i| format!("w_{i}")));
    header.push("product".into());
    header.push("sentence_ids".into());
    w.write_record(&header)?;
    for row in &run.rows {
        let mut rec = vec![row.round.to_string(), row.arm.name().to_string(), row.seed.to_string()];
        rec.extend(row.metrics().into_iter().map(num));
        rec.extend(row.w.iter().copied().map(num));
        rec.push(row.product.clone());
        rec.push(row.sentence_ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| SimulationError::Plot(e.to_string()))
}

fn aggregate_csv(rows: &[AggregateRow]) -> Result<Vec<u8>, SimulationError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["round", "arm", "seeds"].iter().map(|s| s.to_string()).collect();
    for c in METRIC_COLUMNS {
        header.extend([format!("{c}_mean"), format!("{c}_min"), format!("{c}_max")]);
    }
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.round.to_string(), row.arm.name().to_string(), row.seeds.to_string()];
        for i in 0..METRIC_COLUMNS.len() {
            rec.extend([num(row.mean[i]), num(row.min[i]), num(row.max[i])]);
        }
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| SimulationError::Plot(e.to_string()))
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), SimulationError> {
    let tmp = path.with_extension("csv.tmp");
    let mut file = std::fs::File::create(&tmp).map_err(|e| SimulationError::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| SimulationError::io(&tmp, e))?;
    file.sync_all().map_err(|e| SimulationError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| SimulationError::io(path, e))
}

/// One CSV per arm and seed plus `aggregate.csv`. Returns the written paths.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>, SimulationError> {
    std::fs::create_dir_all(dir).map_err(|e| SimulationError::io(dir, e))?;
    let mut paths: Vec<PathBuf> = result
        .runs
        .par_iter()
        .map(|run| {
            let path = dir.join(run.file_name());
            write_atomic(&path, &run_csv(run, result.k)?)?;
            Ok(path)
        })
        .collect::<Result<_, SimulationError>>()?;
    let agg = dir.join("aggregate.csv");
    write_atomic(&agg, &aggregate_csv(&result.aggregate)?)?;
    paths.push(agg);
    Ok(paths)
}
