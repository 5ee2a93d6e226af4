//! Synthetic review corpus with planted aspects.
//!
//! Each aspect gets a random unit prototype direction; a sentence about
//! aspect a embeds as its prototype plus isotropic Gaussian noise. The
//! corpus then goes through the regular ingestion, splitting and discovery
//! pipeline, so discovered aspect indices need not match planted ones.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SimulationError;
use crate::aspect::{discover, AspectModel, ComponentTarget, DiscoveryConfig, EmbeddingMatrix};
use crate::catalog::Catalog;
use crate::corpus::{ingest, sentence_split, ReviewRecord, DEFAULT_MAX_SENTENCES_PER_REVIEW};

const TOPICS: [&str; 10] = [
    "scent", "texture", "price", "packaging", "longevity", "color", "irritation", "shipping", "size", "absorption",
];
const OPINIONS: [&str; 6] = ["pleasant", "disappointing", "excellent", "average", "surprising", "consistent"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub k: usize,
    pub products: usize,
    pub sentences_per_product: usize,
    pub sentences_per_review: usize,
    pub dim: usize,
    pub users: usize,
    /// Expected norm of the noise added to a prototype.
    pub noise: f64,
    /// Dirichlet concentration of each product's aspect frequencies;
    /// `None` plants aspects in equal proportion.
    pub product_skew: Option<f64>,
    /// Probability that a sentence blends in a second aspect.
    pub mix_prob: f64,
    /// Largest weight of the blended second aspect.
    pub mix_max: f64,
    pub seed: u64,
    /// PCA components kept by discovery.
    pub components: usize,
    pub n_init: usize,
    pub ratio: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            k: 10,
            products: 3,
            sentences_per_product: 200,
            sentences_per_review: 4,
            dim: 32,
            users: 60,
            noise: 0.3,
            product_skew: None,
            mix_prob: 0.0,
            mix_max: 0.45,
            seed: 11,
            components: 17,
            n_init: 4,
            ratio: crate::aspect::DEFAULT_RATIO,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: &str| Err(SimulationError::Config(format!("synthetic corpus: {m}")));
        if self.k < 2 || self.products == 0 || self.users == 0 {
            return bad("need k >= 2, at least one product and one user");
        }
        if self.sentences_per_product < self.k {
            return bad("every product needs at least k sentences");
        }
        if self.sentences_per_review == 0 || self.sentences_per_review > DEFAULT_MAX_SENTENCES_PER_REVIEW {
            return bad("sentences_per_review must be in 1..=20");
        }
        if self.dim < self.k || self.components == 0 || self.components > self.dim {
            return bad("need k <= dim and 1 <= components <= dim");
        }
        if !(self.noise >= 0.0) {
            return bad("noise must be nonnegative");
        }
        if self.product_skew.is_some_and(|a| !(a > 0.0)) {
            return bad("product_skew must be positive");
        }
        if !(0.0..=1.0).contains(&self.mix_prob) || !(0.0..0.5).contains(&self.mix_max) {
            return bad("need mix_prob in [0, 1] and mix_max in [0, 0.5)");
        }
        Ok(())
    }
}

pub fn product_id(p: usize) -> String {
    format!("P{p:03}")
}

fn sentence_text(product: usize, index: usize, aspect: usize, opinion: usize) -> String {
    let topic = TOPICS.get(aspect).map(|s| s.to_string()).unwrap_or(format!("facet{aspect}"));
    format!(
        "Item {product} note {index} says the {topic} is {} overall.",
        OPINIONS[opinion % OPINIONS.len()]
    )
}

/// Primary aspect of every sentence of product `p`. Every aspect appears at
/// least once; the rest follow the product's aspect frequencies.
fn plant_aspects(cfg: &SynthConfig, p: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = cfg.sentences_per_product;
    let Some(alpha) = cfg.product_skew else {
        return (0..n).map(|j| (j + p) % cfg.k).collect();
    };
    let gamma = Gamma::new(alpha, 1.0).expect("positive shape");
    let freq: Vec<f64> = (0..cfg.k).map(|_| rng.sample(gamma) + 1e-12).collect();
    let total: f64 = freq.iter().sum();
    let mut plan: Vec<usize> = (0..cfg.k).collect();
    while plan.len() < n {
        let mut u = rng.random::<f64>() * total;
        let mut pick = cfg.k - 1;
        for (a, f) in freq.iter().enumerate() {
            if u < *f {
                pick = a;
                break;
            }
            u -= f;
        }
        plan.push(pick);
    }
    // interleave so reviews are not single-aspect runs
    for i in (1..plan.len()).rev() {
        let j = rng.random_range(0..=i);
        plan.swap(i, j);
    }
    plan
}

/// Synthetic corpus, its embeddings in sentence-id order and the planted
/// aspect of every sentence.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub reviews: Vec<ReviewRecord>,
    pub embeddings: EmbeddingMatrix,
    pub planted: Vec<usize>,
    pub tables: crate::corpus::CorpusTables,
}

pub fn synthetic_corpus(cfg: &SynthConfig) -> Result<SyntheticCorpus, SimulationError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let prototypes: Vec<Vec<f64>> = (0..cfg.k)
        .map(|_| {
            let v: Vec<f64> = (0..cfg.dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    let scale = cfg.noise / (cfg.dim as f64).sqrt();

    let mut reviews = Vec::new();
    let mut by_text: HashMap<String, (Vec<f64>, usize)> = HashMap::new();
    let mut review_no = 0usize;
    for p in 0..cfg.products {
        let plan = plant_aspects(cfg, p, &mut rng);
        let mut texts = Vec::with_capacity(cfg.sentences_per_product);
        for (j, &aspect) in plan.iter().enumerate() {
            let text = sentence_text(p, j, aspect, rng.random_range(0..OPINIONS.len()));
            let mut center = prototypes[aspect].clone();
            if cfg.mix_prob > 0.0 && rng.random::<f64>() < cfg.mix_prob {
                let other = (aspect + rng.random_range(1..cfg.k)) % cfg.k;
                let share = rng.random::<f64>() * cfg.mix_max;
                for (c, o) in center.iter_mut().zip(&prototypes[other]) {
                    *c = (1.0 - share) * *c + share * o;
                }
            }
            let emb: Vec<f64> = center
                .iter()
                .map(|&x| x + scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            by_text.insert(text.clone(), (emb, aspect));
            texts.push(text);
        }
        for chunk in texts.chunks(cfg.sentences_per_review) {
            reviews.push(ReviewRecord {
                user_id: format!("U{:03}", (review_no * 7 + p) % cfg.users),
                product_id: product_id(p),
                timestamp: review_no as i64,
                title: String::new(),
                text: chunk.join(" "),
                helpful_votes: 0,
                verified: true,
            });
            review_no += 1;
        }
    }

    let (tables, issues) = ingest(reviews.clone());
    debug_assert!(issues.is_empty());
    let tables = sentence_split(tables, 3, DEFAULT_MAX_SENTENCES_PER_REVIEW)?;
    let mut rows = Vec::with_capacity(tables.sentences.len());
    let mut planted = Vec::with_capacity(tables.sentences.len());
    for s in &tables.sentences {
        let (emb, aspect) = by_text
            .get(&s.text)
            .ok_or_else(|| SimulationError::Config(format!("synthetic sentence lost in splitting: {}", s.text)))?;
        rows.push(emb.clone());
        planted.push(*aspect);
    }
    Ok(SyntheticCorpus {
        reviews,
        embeddings: EmbeddingMatrix::from_rows(rows)?,
        planted,
        tables,
    })
}

/// Generates the corpus, discovers K aspects on it and joins the result.
pub fn synthetic_catalog(cfg: &SynthConfig) -> Result<(Catalog, AspectModel), SimulationError> {
    let corpus = synthetic_corpus(cfg)?;
    let discovery = DiscoveryConfig {
        k: cfg.k,
        components: ComponentTarget::Count(cfg.components),
        n_init: cfg.n_init,
        seed: cfg.seed,
        ratio: cfg.ratio,
        ..DiscoveryConfig::default()
    };
    let space = discover(corpus.embeddings, &discovery)?;
    let catalog = Catalog::from_parts(corpus.tables, space.phi, space.reduced);
    Ok((catalog, space.model))
}
