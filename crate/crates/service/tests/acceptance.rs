//! Acceptance checks. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any failed.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use prefer_core::aspect::{calibrate_tau, softmax_memberships};
use prefer_core::catalog::Catalog;
use prefer_core::preference::{exponentiated_gradient, optimized_eta0, static_bound, BoundParams};
use prefer_core::rng::{CounterRng, StreamKind};
use prefer_core::selection::{
    boltzmann_probabilities, gumbel_argmax, marginal_gain, mmr_score, objective, select_gumbel, select_mmr,
    EvidenceCandidate, SelectionConfig, SelectionMode,
};
use prefer_core::simplex::AspectVector;
use prefer_core::simulation::{
    load_catalog, run_on_catalog, write_outputs, Arm, ExperimentConfig, ExperimentResult, FeedbackOracle,
};
use prefer_core::summarizer::Summarizer;
use prefer_service::{AppState, Engine};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Outcome = Result<String, String>;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_simplex(rng: &mut ChaCha8Rng, k: usize, floor: f64) -> AspectVector {
    let raw: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-300).ln() + floor).collect();
    AspectVector::from_weights(raw).unwrap()
}

// ---------------------------------------------------------------- mirror step

/// argmin_w η⟨g, w⟩ + KL(w‖ŵ) over the simplex by equality-constrained
/// damped Newton on the primal, started at ŵ.
fn prox_newton(w_hat: &[f64], g: &[f64], eta: f64) -> Vec<f64> {
    let obj = |w: &[f64]| -> f64 {
        w.iter()
            .zip(w_hat)
            .zip(g)
            .map(|((wk, hk), gk)| eta * gk * wk + wk * (wk / hk).ln() - wk + hk)
            .sum()
    };
    let mut w = w_hat.to_vec();
    for _ in 0..200 {
        let grad: Vec<f64> = w
            .iter()
            .zip(w_hat)
            .zip(g)
            .map(|((wk, hk), gk)| eta * gk + (wk / hk).ln())
            .collect();
        // H = diag(1/w); the multiplier keeps Σ Δ = 0
        let nu = -w.iter().zip(&grad).map(|(wk, gk)| wk * gk).sum::<f64>() / w.iter().sum::<f64>();
        let delta: Vec<f64> = w.iter().zip(&grad).map(|(wk, gk)| -wk * (gk + nu)).collect();
        let decrement: f64 = delta.iter().zip(&grad).map(|(d, gk)| -d * (gk + nu)).sum();
        if decrement < 1e-30 {
            break;
        }
        let f0 = obj(&w);
        let slope: f64 = delta.iter().zip(&grad).map(|(d, gk)| d * gk).sum();
        let mut s = 1.0;
        loop {
            let trial: Vec<f64> = w.iter().zip(&delta).map(|(wk, d)| wk + s * d).collect();
            if trial.iter().all(|&x| x > 0.0) && obj(&trial) <= f0 + 0.25 * s * slope {
                w = trial;
                break;
            }
            s *= 0.5;
            if s < 1e-20 {
                return w;
            }
        }
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

fn omd_vs_prox() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let k = rng.random_range(2..=5);
        let w_hat = random_simplex(&mut rng, k, 1e-3);
        let z = random_simplex(&mut rng, k, 0.0);
        let f_tilde = rng.random_range(-1.0..=1.0);
        let eta = rng.random_range(0.01..=4.0);
        let closed = exponentiated_gradient(&w_hat, f_tilde, &z, eta).unwrap();
        let g: Vec<f64> = z.as_slice().iter().map(|zk| -f_tilde * zk).collect();
        let prox = prox_newton(w_hat.as_slice(), &g, eta);
        for (a, b) in closed.as_slice().iter().zip(&prox) {
            worst = worst.max((a - b).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-6 && secs < 30.0,
        format!("max coordinate error {worst:.2e} over 1000 tuples, {secs:.2}s"),
    )
}

// ---------------------------------------------------------------- gumbel law

fn softmax(scores: &[f64], beta: f64) -> Vec<f64> {
    let m = scores.iter().fold(f64::NEG_INFINITY, |a, &s| a.max(beta * s));
    let e: Vec<f64> = scores.iter().map(|s| (beta * s - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|x| x / z).collect()
}

fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn gumbel_boltzmann() -> Outcome {
    const DRAWS: u64 = 100_000;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut worst_step, mut worst_select, mut worst_formula) = (0.0f64, 0.0f64, 0.0f64);
    for v in 0..20u64 {
        let n = rng.random_range(2..=8);
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let beta = rng.random_range(1.0..4.0);
        let want = softmax(&scores, beta);
        worst_formula = worst_formula.max(tv(&want, &boltzmann_probabilities(&scores, beta)));

        // a single perturbed step
        let stream = CounterRng::new(1000 + v, StreamKind::Gumbel);
        let mut counts = vec![0u64; n];
        for d in 0..DRAWS {
            counts[gumbel_argmax(&scores, beta, &stream, d, 0)] += 1;
        }
        let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / DRAWS as f64).collect();
        worst_step = worst_step.max(tv(&freq, &want));

        // the first pick of the extractor, with β held fixed across rounds
        let k = rng.random_range(2..=4);
        let candidates: Vec<EvidenceCandidate> = (0..n)
            .map(|i| EvidenceCandidate {
                sentence_id: i * 3 + 1,
                phi: random_simplex(&mut rng, k, 0.0),
                reduced: (0..3).map(|_| rng.random_range(0.1..1.0)).collect(),
                token_count: 5,
            })
            .collect();
        let w_hat = random_simplex(&mut rng, k, 0.0);
        let cfg = SelectionConfig {
            lambda: rng.random_range(0.3..1.0),
            max_sentences: 1,
            mode: SelectionMode::Gumbel,
            beta0: beta,
            c_beta: 0.0,
            seed: 5000 + v,
            ..SelectionConfig::default()
        };
        let a: Vec<f64> = candidates
            .iter()
            .map(|c| cfg.lambda * w_hat.dot(&c.phi).unwrap())
            .collect();
        let want = softmax(&a, beta);
        let mut counts = vec![0u64; n];
        for t in 1..=DRAWS {
            let pick = select_gumbel(&candidates, &w_hat, &cfg, t).unwrap().picks[0].sentence_id;
            counts[(pick - 1) / 3] += 1;
        }
        let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / DRAWS as f64).collect();
        worst_select = worst_select.max(tv(&freq, &want));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst_step <= 0.01 && worst_select <= 0.01 && worst_formula <= 1e-12 && secs < 60.0,
        format!(
            "max TV {worst_step:.4} (step), {worst_select:.4} (extractor first pick), formula {worst_formula:.1e}, 20 vectors x 1e5 draws, {secs:.1}s"
        ),
    )
}

// ---------------------------------------------------------------- mmr cache

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let (mut na, mut nb) = (0.0, 0.0);
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// Recomputes every score from scratch at every step.
fn brute_force_mmr(c: &[EvidenceCandidate], w: &AspectVector, cfg: &SelectionConfig) -> Vec<usize> {
    let rel: Vec<f64> = c
        .iter()
        .map(|x| w.as_slice().iter().zip(x.phi.as_slice()).map(|(a, b)| a * b).sum())
        .collect();
    let mut chosen: Vec<usize> = Vec::new();
    let mut tokens = 0;
    for _ in 0..cfg.max_sentences {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..c.len() {
            if chosen.contains(&j) || cfg.max_tokens.is_some_and(|b| tokens + c[j].token_count > b) {
                continue;
            }
            let red = chosen
                .iter()
                .map(|&i| cos(&c[i].reduced, &c[j].reduced))
                .fold(0.0, f64::max);
            let a = cfg.lambda * rel[j] - (1.0 - cfg.lambda) * red;
            let better = match best {
                None => true,
                Some((b, ba)) => a > ba || (a == ba && c[j].sentence_id < c[b].sentence_id),
            };
            if better {
                best = Some((j, a));
            }
        }
        let Some((j, _)) = best else { break };
        tokens += c[j].token_count;
        chosen.push(j);
    }
    chosen.iter().map(|&j| c[j].sentence_id).collect()
}

fn mmr_cache() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut mismatches = 0;
    let mut with_ties = 0;
    for _ in 0..500 {
        let n = rng.random_range(1..=50);
        let k = rng.random_range(2..=6);
        let dim = rng.random_range(2..=8);
        let mut ids: Vec<usize> = (0..n).map(|i| i * 7 + 3).collect();
        for i in (1..n).rev() {
            ids.swap(i, rng.random_range(0..=i));
        }
        let mut c: Vec<EvidenceCandidate> = Vec::with_capacity(n);
        for &id in ids.iter() {
            if !c.is_empty() && rng.random_bool(0.15) {
                // exact duplicate content under another id
                let src = c[rng.random_range(0..c.len())].clone();
                c.push(EvidenceCandidate { sentence_id: id, ..src });
                continue;
            }
            let reduced: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            c.push(EvidenceCandidate {
                sentence_id: id,
                phi: random_simplex(&mut rng, k, 0.0),
                reduced,
                token_count: rng.random_range(3..30),
            });
        }
        if c.iter().any(|x| c.iter().any(|y| y.sentence_id != x.sentence_id && y.phi == x.phi)) {
            with_ties += 1;
        }
        let w = random_simplex(&mut rng, k, 0.0);
        let cfg = SelectionConfig {
            lambda: rng.random_range(0.0..=1.0),
            max_sentences: rng.random_range(1..=10),
            max_tokens: rng.random_bool(0.3).then(|| rng.random_range(10..120)),
            ..SelectionConfig::default()
        };
        let got = select_mmr(&c, &w, &cfg).unwrap().sentence_ids();
        if got != brute_force_mmr(&c, &w, &cfg) {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0,
        format!("{mismatches} mismatching pick sequences over 500 instances ({with_ties} with duplicate sentences)"),
    )
}

// ---------------------------------------------------------------- submodularity

fn members(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

fn submodularity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut dr, mut mmr, mut gain_err, mut mono, mut checks) = (0u64, 0u64, 0.0f64, 0u64, 0u64);
    let mut monotone_instances = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=8);
        let rel: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut sims = vec![vec![1.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let s = rng.random::<f64>() * rng.random::<f64>();
                sims[i][j] = s;
                sims[j][i] = s;
            }
        }
        let sim = |i: usize, j: usize| sims[i][j];
        let lambda = rng.random::<f64>();
        let full = (1u32 << n) - 1;
        // monotonicity condition: λ·Rel_j ≥ (1−λ)·Σ_{i≠j} sim(i, j)
        let monotone_case = (0..n).all(|j| {
            lambda * rel[j] >= (1.0 - lambda) * (0..n).filter(|&i| i != j).map(|i| sims[i][j]).sum::<f64>()
        });
        monotone_instances += monotone_case as u32;
        for b in 0..=full {
            let set_b = members(b, n);
            let mut a = b;
            loop {
                let set_a = members(a, n);
                for x in (0..n).filter(|x| b >> x & 1 == 0) {
                    checks += 1;
                    let ga = marginal_gain(&rel, sim, lambda, &set_a, x);
                    let gb = marginal_gain(&rel, sim, lambda, &set_b, x);
                    if ga < gb - 1e-12 {
                        dr += 1;
                    }
                    if mmr_score(&rel, sim, lambda, &set_a, x) < mmr_score(&rel, sim, lambda, &set_b, x) - 1e-12 {
                        mmr += 1;
                    }
                    if a == b {
                        let mut with = set_b.clone();
                        with.push(x);
                        let diff = objective(&rel, sim, lambda, &with) - objective(&rel, sim, lambda, &set_b);
                        gain_err = gain_err.max((diff - gb).abs());
                        if monotone_case && gb < -1e-12 {
                            mono += 1;
                        }
                    }
                }
                if a == 0 {
                    break;
                }
                a = (a - 1) & b;
            }
        }
    }
    check(
        dr == 0 && mmr == 0 && mono == 0 && gain_err < 1e-12,
        format!(
            "{dr} diminishing-returns and {mmr} MMR-monotonicity violations in {checks} (A ⊆ B, x) checks; {mono} monotonicity violations over {monotone_instances} qualifying instances; gain vs objective difference {gain_err:.1e}"
        ),
    )
}

// ---------------------------------------------------------------- bound

fn bound_arithmetic() -> Outcome {
    let p = BoundParams::optimized(1.0, 1e-4, 1.0);
    let cum = static_bound(&p, 100);
    // independent arithmetic
    let log = (1e4f64).ln();
    let eta0 = log.sqrt();
    let oracle = (log / eta0 + eta0) * (101f64).sqrt();
    check(
        (cum - 61.0).abs() <= 1e-2
            && (cum / 100.0 - 0.610).abs() <= 1e-2
            && (cum - oracle).abs() < 1e-9
            && (p.eta0 - optimized_eta0(1.0, 1e-4, 1.0)).abs() < 1e-15,
        format!("static bound {cum:.4} cumulative, {:.5} average, eta0 {:.5}", cum / 100.0, p.eta0),
    )
}

// ---------------------------------------------------------------- τ

fn tau_calibration(catalog: &Catalog) -> Outcome {
    // centroids (0,0), (2,0), (0,50); points (x, 0) with x ∈ [0, 1) have
    // nearest-pair gap (2−x)² − x² = 4 − 4x
    let centroids = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 50.0]];
    let n = 101;
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    for i in (1..n).rev() {
        xs.swap(i, rng.random_range(0..=i));
    }
    let cloud: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x, 0.0]).collect();
    let x_med = 50.0 / n as f64;
    let gap = 4.0 - 4.0 * x_med;
    let mut worst_ratio = 0.0f64;
    for r in [2.0, 10.0, 100.0] {
        let tau = calibrate_tau(&cloud, &centroids, r).unwrap();
        if (tau - r.ln() / gap).abs() > 1e-12 {
            return Err(format!("tau {tau} differs from log(r)/gap for r={r}"));
        }
        let phi = softmax_memberships(&[x_med, 0.0], &centroids, tau);
        let ratio = phi.as_slice()[0] / phi.as_slice()[1];
        worst_ratio = worst_ratio.max((ratio - r).abs());
    }
    let worst_sum = catalog
        .phi
        .iter()
        .map(|p| (p.as_slice().iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    check(
        worst_ratio <= 1e-6 && worst_sum <= 1e-9,
        format!(
            "top-two ratio error {worst_ratio:.1e} (r = 2, 10, 100); max |Σφ − 1| {worst_sum:.1e} over {} sentences",
            catalog.phi.len()
        ),
    )
}

// ---------------------------------------------------------------- runs

struct Runs {
    stationary_cfg: ExperimentConfig,
    stationary: ExperimentResult,
    stationary_secs: f64,
    drift_cfg: ExperimentConfig,
    drift: ExperimentResult,
}

fn mean_series(r: &ExperimentResult, arm: Arm, column: &str) -> Vec<f64> {
    r.aggregate_of(arm).iter().map(|a| a.mean_of(column).unwrap()).collect()
}

fn regret_below_bound(runs: &Runs) -> Outcome {
    let mut details = Vec::new();
    let mut ok = runs.stationary_secs < 120.0;
    for arm in [Arm::PreferMmr, Arm::PreferGumbel] {
        let regret = mean_series(&runs.stationary, arm, "regret_avg");
        let bound = mean_series(&runs.stationary, arm, "bound_avg");
        let above = regret.iter().zip(&bound).filter(|(r, b)| r >= b).count();
        let per_seed_above = runs
            .stationary
            .runs_of(arm)
            .flat_map(|run| run.rows.iter())
            .filter(|row| row.regret_avg >= row.bound_avg)
            .count();
        let (rt, bt) = (*regret.last().unwrap(), *bound.last().unwrap());
        ok &= above == 0 && rt < 0.5 * bt;
        details.push(format!(
            "{}: rounds at or above bound {above} (per seed {per_seed_above}), final {rt:.4} vs bound {bt:.4}",
            arm.name()
        ));
    }
    details.push(format!("run time {:.1}s", runs.stationary_secs));
    check(ok, details.join("; "))
}

fn convergence_separation(runs: &Runs) -> Outcome {
    let fin = |arm| *mean_series(&runs.stationary, arm, "A_pref").last().unwrap();
    let best_static = fin(Arm::StaticMmr).max(fin(Arm::StaticGumbel));
    let (m, g) = (fin(Arm::PreferMmr), fin(Arm::PreferGumbel));
    check(
        m.min(g) >= best_static + 0.2 && m.min(g) >= 0.9,
        format!(
            "final A_pref prefer-mmr {m:.4}, prefer-gumbel {g:.4}, static-mmr {:.4}, static-gumbel {:.4}",
            fin(Arm::StaticMmr),
            fin(Arm::StaticGumbel)
        ),
    )
}

fn drift_tracking(runs: &Runs) -> Outcome {
    let r = &runs.drift;
    let v_ok = r.runs.iter().all(|run| run.ledger.path_length() == 2.0);
    let mut ok = v_ok;
    let mut details = vec![format!("V_T = 2 in every run: {v_ok}")];
    for arm in [Arm::PreferMmr, Arm::PreferGumbel] {
        let a = mean_series(r, arm, "A_pref");
        let reg = mean_series(r, arm, "regret_avg");
        let at = |s: &[f64], t: usize| s[t - 1];
        let before = at(&a, 79);
        let dip = a[79..120].iter().copied().fold(f64::INFINITY, f64::min);
        let fin = at(&a, 200);
        let peak = reg[79..120].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let rises = peak > at(&reg, 79);
        let falls = at(&reg, 200) < at(&reg, 120);
        ok &= dip < before && rises && falls;
        if arm == Arm::PreferGumbel {
            ok &= fin >= 0.8;
        }
        details.push(format!(
            "{}: A_pref {before:.3} at t=79, min {dip:.3} in window, {fin:.3} at T; regret_avg {:.4} -> peak {peak:.4} in window -> {:.4} at t=120 -> {:.4} at T",
            arm.name(),
            at(&reg, 79),
            at(&reg, 120),
            at(&reg, 200)
        ));
    }
    check(ok, details.join("; "))
}

fn interior(runs: &Runs, api_min: f64) -> Outcome {
    let min_of = |r: &ExperimentResult| {
        r.runs
            .iter()
            .flat_map(|run| run.rows.iter())
            .map(|row| row.min_coord_pre.min(row.min_coord_post))
            .fold(f64::INFINITY, f64::min)
    };
    let (s, d) = (min_of(&runs.stationary), min_of(&runs.drift));
    check(
        s > 1e-4 && d > 1e-4 && api_min > 1e-4,
        format!("min coordinate pre/post: stationary {s:.3e}, drift {d:.3e}, HTTP session {api_min:.3e}"),
    )
}

fn csv_bytes(result: &ExperimentResult) -> Vec<(String, Vec<u8>)> {
    let dir = tempfile::tempdir().unwrap();
    let mut files: Vec<(String, Vec<u8>)> = write_outputs(result, dir.path())
        .unwrap()
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism(runs: &Runs) -> Outcome {
    let mut compared = 0;
    for (cfg, first) in [
        (&runs.stationary_cfg, &runs.stationary),
        (&runs.drift_cfg, &runs.drift),
    ] {
        let catalog = load_catalog(&cfg.data).unwrap();
        let again = run_on_catalog(&catalog, cfg).unwrap();
        let (a, b) = (csv_bytes(first), csv_bytes(&again));
        if a != b {
            let differing: Vec<&str> = a
                .iter()
                .zip(&b)
                .filter(|(x, y)| x != y)
                .map(|(x, _)| x.0.as_str())
                .collect();
            return Err(format!("CSV output differs: {differing:?}"));
        }
        compared += a.len();
    }
    Ok(format!("{compared} CSV files byte-identical across repeated runs"))
}

// ---------------------------------------------------------------- HTTP replay

/// Replays a 50-round oracle session over HTTP for each adaptive arm and
/// returns the largest deviation and the smallest coordinate seen.
fn http_replay(cfg: &ExperimentConfig, catalog: &Catalog) -> (f64, f64, usize) {
    const ROUNDS: u64 = 50;
    const SEED: u64 = 3;
    let mut sim_cfg = cfg.clone();
    sim_cfg.rounds = ROUNDS;
    sim_cfg.seeds = vec![SEED];
    sim_cfg.arms = vec![Arm::PreferMmr, Arm::PreferGumbel];
    let sim = run_on_catalog(catalog, &sim_cfg).unwrap();

    let engine = Engine::new(catalog.clone(), Summarizer::stub(), None).unwrap();
    let server = common::TestServer::start(AppState::new(engine));
    let client = server.client();
    let oracle = FeedbackOracle::from_config(&cfg.oracle, catalog.k, SEED).unwrap();
    let (mut worst, mut min_coord, mut ids_equal) = (0.0f64, f64::INFINITY, 0);
    for arm in [Arm::PreferMmr, Arm::PreferGumbel] {
        let id = client.create(&json!({
            "products": sim.products,
            "selection": cfg.selection_for(arm, SEED),
            "profile": cfg.profile,
            "preference": cfg.effective_preference(),
        }));
        let expected = sim.run(arm, SEED).unwrap();
        for t in 1..=ROUNDS {
            let (status, summary) = client.get(&format!("/sessions/{id}/summary"));
            assert_eq!(status, 200, "{summary}");
            let z: AspectVector = serde_json::from_value(summary["z"].clone()).unwrap();
            let f = oracle.feedback(t, &z).unwrap();
            let out: Value = client.ok(client.post(
                &format!("/sessions/{id}/feedback"),
                &json!({"summary_id": summary["summary_id"], "f": f}),
            ));
            let w: Vec<f64> = serde_json::from_value(out["w_hat"].clone()).unwrap();
            let row = &expected.rows[t as usize - 1];
            let ids: Vec<usize> = summary["evidence"]
                .as_array()
                .unwrap()
                .iter()
                .map(|e| e["sentence_id"].as_u64().unwrap() as usize)
                .collect();
            ids_equal += (ids == row.sentence_ids) as usize;
            for (a, b) in w.iter().zip(&row.w) {
                worst = worst.max((a - b).abs());
            }
            let pre: Vec<f64> = serde_json::from_value(summary["w_hat"].clone()).unwrap();
            min_coord = w.iter().chain(&pre).copied().fold(min_coord, f64::min);
        }
    }
    (worst, min_coord, ids_equal)
}

// ---------------------------------------------------------------- runner

fn run(name: &str, f: impl FnOnce() -> Outcome, failed: &mut usize) {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let took = fmt_secs(start.elapsed());
    match outcome {
        Ok(d) => println!("PASS  {name:<28} {d} [{took}]"),
        Err(d) => {
            *failed += 1;
            println!("FAIL  {name:<28} {d} [{took}]");
        }
    }
}

fn fmt_secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn main() {
    let mut failed = 0;
    run("omd_closed_form_vs_prox", omd_vs_prox, &mut failed);
    run("gumbel_boltzmann_law", gumbel_boltzmann, &mut failed);
    run("mmr_cache_vs_brute_force", mmr_cache, &mut failed);
    run("submodularity", submodularity, &mut failed);
    run("bound_arithmetic", bound_arithmetic, &mut failed);

    let stationary_cfg = ExperimentConfig::load(&config_path("stationary.json")).unwrap();
    let drift_cfg = ExperimentConfig::load(&config_path("drift.json")).unwrap();
    let start = Instant::now();
    let catalog = load_catalog(&stationary_cfg.data).unwrap();
    let stationary = run_on_catalog(&catalog, &stationary_cfg).unwrap();
    let stationary_secs = start.elapsed().as_secs_f64();
    let drift = run_on_catalog(&load_catalog(&drift_cfg.data).unwrap(), &drift_cfg).unwrap();
    let runs = Runs {
        stationary_cfg,
        stationary,
        stationary_secs,
        drift_cfg,
        drift,
    };

    run("regret_below_bound", || regret_below_bound(&runs), &mut failed);
    run("convergence_separation", || convergence_separation(&runs), &mut failed);
    run("drift_tracking", || drift_tracking(&runs), &mut failed);
    let replay = catch_unwind(AssertUnwindSafe(|| http_replay(&runs.stationary_cfg, &catalog)))
        .map_err(|_| "HTTP replay panicked".to_string());
    let replay_min = replay.as_ref().map_or(f64::NAN, |r| r.1);
    run("interior_iterates", || interior(&runs, replay_min), &mut failed);
    run("tau_calibration", || tau_calibration(&catalog), &mut failed);
    run("determinism", || determinism(&runs), &mut failed);
    run(
        "api_simulation_equivalence",
        || {
            let (err, _, ids) = replay?;
            check(
                err <= 1e-12,
                format!("max |w_http − w_sim| {err:.1e} over 2 arms x 50 rounds; evidence identical in {ids}/100 rounds"),
            )
        },
        &mut failed,
    );
    println!("{} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
