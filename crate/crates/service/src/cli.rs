//! The `prefer` command line.

use std::error::Error;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use prefer_core::aspect::{
    aspect_mass, discover, k_selection, user_profiles, AspectModel, ComponentTarget, DiagnosticsReport,
    DiscoveryConfig, EmbeddingMatrix, DEFAULT_SILHOUETTE_SAMPLE,
};
use prefer_core::catalog::Catalog;
use prefer_core::corpus::{
    ingest, load_tables, read_raw_records, save_tables, sentence_split, DEFAULT_MAX_SENTENCES_PER_REVIEW,
    DEFAULT_MIN_WORDS,
};
use prefer_core::simulation::{
    compare_profiles, load_catalog, plot_csv, run_on_catalog, synthetic_catalog, synthetic_corpus, write_outputs,
    Arm, ExperimentConfig, ExperimentResult, NamedProfile, OracleConfig, SynthConfig, TargetSpec,
};
use prefer_core::summarizer::{HttpRewriter, RewriterEndpoint, Summarizer};
use serde::de::DeserializeOwned;

use crate::api::AppState;
use crate::session::Engine;
use crate::store::Store;

type CliResult<T = ()> = Result<T, Box<dyn Error>>;

#[derive(Debug, Parser)]
#[command(name = "prefer", version, about = "Preference-adaptive review summaries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus with planted aspects and its embeddings.
    Synth(SynthArgs),
    /// Validate raw reviews and split them into sentences.
    Ingest(IngestArgs),
    /// Fit PCA, K-means and τ on sentence embeddings.
    DiscoverAspects(DiscoverArgs),
    /// Run the arms of an experiment and write per-round CSVs.
    Simulate(SimulateArgs),
    /// Like `simulate`, for configs whose target drifts.
    Drift(SimulateArgs),
    /// Evidence and summaries of one product under several profiles.
    CompareProfiles(CompareArgs),
    /// Render columns of a result CSV as an SVG line chart.
    Plot(PlotArgs),
    /// Serve live sessions over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Synthetic corpus settings (JSON); defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_WORDS)]
    pub min_words: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_SENTENCES_PER_REVIEW)]
    pub max_sents: usize,
}

#[derive(Debug, Args)]
pub struct DiscoverArgs {
    #[arg(long)]
    pub emb: PathBuf,
    /// Sentence table; its size must match the embedding rows.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, conflicts_with = "components")]
    pub variance_target: Option<f64>,
    #[arg(long)]
    pub components: Option<usize>,
    #[arg(long, default_value_t = prefer_core::aspect::DEFAULT_RATIO)]
    pub r: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub n_init: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write K-selection indices, aspect mass and per-user profiles.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// K values scored in the report.
    #[arg(long, value_delimiter = ',', default_values_t = vec![6, 8, 10, 12, 14])]
    pub k_candidates: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the config's.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub product: String,
    /// JSON array of {"name", "w"}.
    #[arg(long)]
    pub profiles: PathBuf,
    /// Experiment config supplying data, selection and profile settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    #[arg(long, default_value = "")]
    pub title: String,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, requires_all = ["corpus", "emb"], conflicts_with = "synthetic")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Sentence embeddings, needed to place sentences in the aspect space.
    #[arg(long)]
    pub emb: Option<PathBuf>,
    /// Serve a synthetic corpus built from this settings file instead.
    #[arg(long, required_unless_present = "model")]
    pub synthetic: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// 0 picks a free port; the bound address is printed.
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Session log directory; sessions are in-memory only without it.
    #[arg(long)]
    pub state_dir: Option<PathBuf>,
    /// Oracle settings (JSON) for demo mode.
    #[arg(long)]
    pub demo_oracle: Option<PathBuf>,
    /// Text-generation endpoint (JSON); the template stub otherwise.
    #[arg(long)]
    pub rewriter: Option<PathBuf>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult {
    let mut w = BufWriter::new(File::create(path).map_err(|e| format!("{}: {e}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Ingest(a) => ingest_cmd(a),
        Command::DiscoverAspects(a) => discover_cmd(a),
        Command::Simulate(a) => simulate(a, false),
        Command::Drift(a) => simulate(a, true),
        Command::CompareProfiles(a) => compare(a),
        Command::Plot(a) => plot(a),
        Command::Serve(a) => serve(a),
    }
}

fn synth(a: SynthArgs) -> CliResult {
    let cfg: SynthConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => SynthConfig::default(),
    };
    let corpus = synthetic_corpus(&cfg)?;
    fs::create_dir_all(&a.out)?;
    let mut raw = BufWriter::new(File::create(a.out.join("raw.jsonl"))?);
    for r in &corpus.reviews {
        serde_json::to_writer(&mut raw, r)?;
        raw.write_all(b"\n")?;
    }
    raw.flush()?;
    save_tables(&corpus.tables, &a.out.join("corpus.jsonl"))?;
    corpus.embeddings.save(&a.out.join("embeddings.bin"))?;
    write_json(&a.out.join("planted.json"), &corpus.planted)?;
    println!(
        "wrote {} reviews, {} sentences, {}x{} embeddings to {}",
        corpus.reviews.len(),
        corpus.tables.sentences.len(),
        corpus.embeddings.rows(),
        corpus.embeddings.dim(),
        a.out.display()
    );
    Ok(())
}

fn ingest_cmd(a: IngestArgs) -> CliResult {
    let file = File::open(&a.input).map_err(|e| format!("{}: {e}", a.input.display()))?;
    let (records, mut issues) = read_raw_records(BufReader::new(file))?;
    let (tables, more) = ingest(records);
    issues.extend(more);
    let tables = sentence_split(tables, a.min_words, a.max_sents)?;
    save_tables(&tables, &a.out)?;
    for issue in &issues {
        eprintln!("skipped record {}: {}", issue.position, issue.reason);
    }
    println!(
        "{} reviews, {} sentences, {} skipped",
        tables.reviews.len(),
        tables.sentences.len(),
        issues.len()
    );
    Ok(())
}

fn discover_cmd(a: DiscoverArgs) -> CliResult {
    let emb = EmbeddingMatrix::load(&a.emb)?;
    let tables = match &a.corpus {
        Some(p) => {
            let t = load_tables(p)?;
            if t.sentences.len() != emb.rows() {
                return Err(format!(
                    "corpus has {} sentences but the embedding matrix has {} rows",
                    t.sentences.len(),
                    emb.rows()
                )
                .into());
            }
            Some(t)
        }
        None => None,
    };
    let components = match (a.components, a.variance_target) {
        (Some(m), _) => ComponentTarget::Count(m),
        (None, Some(v)) => ComponentTarget::VarianceTarget(v),
        (None, None) => DiscoveryConfig::default().components,
    };
    let cfg = DiscoveryConfig {
        k: a.k,
        components,
        n_init: a.n_init,
        seed: a.seed,
        ratio: a.r,
        ..DiscoveryConfig::default()
    };
    let space = discover(emb, &cfg)?;
    space.model.save(&a.out)?;
    println!(
        "K={} m={} tau={:.6} written to {}",
        space.model.k,
        space.model.m,
        space.model.tau,
        a.out.display()
    );
    if let Some(path) = &a.report {
        let candidates: Vec<usize> = a.k_candidates.iter().copied().filter(|&k| k >= 2).collect();
        let report = DiagnosticsReport {
            k_selection: k_selection(&space.reduced, &candidates, a.n_init, a.seed, DEFAULT_SILHOUETTE_SAMPLE)?,
            aspect_mass: aspect_mass(&space.phi),
            users: tables.as_ref().map(|t| user_profiles(t, &space.phi)).unwrap_or_default(),
        };
        write_json(path, &report)?;
    }
    Ok(())
}

fn print_result(result: &ExperimentResult) {
    println!("K={} products={} eta0={:.6}", result.k, result.products.len(), result.params.eta0);
    println!("{:<14} {:>8} {:>8} {:>11} {:>11} {:>11}", "arm", "rounds", "A_pref", "regret_avg", "bound_avg", "min_coord");
    for arm in Arm::ALL {
        let Some(last) = result.aggregate_of(arm).last().copied() else {
            continue;
        };
        let min_coord = result
            .runs_of(arm)
            .flat_map(|r| r.rows.iter())
            .map(|r| r.min_coord_pre.min(r.min_coord_post))
            .fold(f64::INFINITY, f64::min);
        println!(
            "{:<14} {:>8} {:>8.4} {:>11.5} {:>11.5} {:>11.3e}",
            arm.name(),
            last.round,
            last.mean_of("A_pref").unwrap_or(f64::NAN),
            last.mean_of("regret_avg").unwrap_or(f64::NAN),
            last.mean_of("bound_avg").unwrap_or(f64::NAN),
            min_coord
        );
    }
}

fn simulate(a: SimulateArgs, drift: bool) -> CliResult {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if drift && !matches!(cfg.oracle.target, TargetSpec::OneHotDrift { .. } | TargetSpec::Drift(_)) {
        return Err("drift needs an oracle target of kind one_hot_drift or drift".into());
    }
    if let Some(out) = a.out {
        cfg.output_dir = Some(out);
    }
    let out = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("results"));
    let catalog = load_catalog(&cfg.data)?;
    let result = run_on_catalog(&catalog, &cfg)?;
    let paths = write_outputs(&result, &out)?;
    print_result(&result);
    println!("wrote {} files to {}", paths.len(), out.display());
    Ok(())
}

fn compare(a: CompareArgs) -> CliResult {
    let cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let profiles: Vec<NamedProfile> = read_json(&a.profiles)?;
    let catalog = load_catalog(&cfg.data)?;
    let report = compare_profiles(
        &catalog,
        &a.product,
        &profiles,
        &cfg.selection,
        &cfg.profile,
        &Summarizer::stub(),
    )?;
    match &a.out {
        Some(p) => write_json(p, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}

fn plot(a: PlotArgs) -> CliResult {
    let file = File::open(&a.input).map_err(|e| format!("{}: {e}", a.input.display()))?;
    let title = if a.title.is_empty() {
        a.input.display().to_string()
    } else {
        a.title
    };
    let svg = plot_csv(BufReader::new(file), &a.columns, &title)?;
    fs::write(&a.out, svg)?;
    Ok(())
}

fn serve_catalog(a: &ServeArgs) -> CliResult<Catalog> {
    if let Some(path) = &a.synthetic {
        let cfg: SynthConfig = read_json(path)?;
        return Ok(synthetic_catalog(&cfg)?.0);
    }
    let (Some(model), Some(corpus), Some(emb)) = (&a.model, &a.corpus, &a.emb) else {
        return Err("serve needs --model, --corpus and --emb, or --synthetic".into());
    };
    let model = AspectModel::load(model)?;
    let tables = load_tables(corpus)?;
    let emb = EmbeddingMatrix::load(emb)?;
    Ok(Catalog::from_model(tables, &model, &emb)?)
}

fn serve(a: ServeArgs) -> CliResult {
    let catalog = serve_catalog(&a)?;
    let demo: Option<OracleConfig> = a.demo_oracle.as_deref().map(read_json).transpose()?;
    let summarizer = match &a.rewriter {
        Some(p) => {
            let endpoint: RewriterEndpoint = read_json(p)?;
            Summarizer::with_generator(Arc::new(HttpRewriter::new(endpoint)?))
        }
        None => Summarizer::stub(),
    };
    let engine = Engine::new(catalog, summarizer, demo)?;
    let app = match &a.state_dir {
        Some(dir) => AppState::with_store(engine, Store::open(dir)?)?,
        None => AppState::new(engine),
    };
    let addr: SocketAddr = format!("{}:{}", a.host, a.port).parse()?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        println!("listening on http://{}", listener.local_addr()?);
        std::io::stdout().flush()?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        crate::api::serve(listener, Arc::new(app), shutdown).await?;
        Ok::<_, Box<dyn Error>>(())
    })
}
