//! Online preference learning.
//!
//! Each round the learner sees the aspect profile z of the evidence it showed
//! and a scalar rating f ∈ [0, 1]. The rating is centered against a running
//! baseline, and the estimate ŵ takes one entropic mirror-descent step on
//! the linear surrogate ℓ(w) = −f̃·wᵀz:
//!
//! ```text
//! ŵ'_k ∝ ŵ_k · exp(η_t · f̃ · z_k),   η_t = η₀ / √(1 + c_η·t)
//! ```

mod profile;
mod regret;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simplex::{self, AspectVector, SimplexError};

pub use profile::{aspect_profile, AspectProfile, ProfileConfig, WeightScheme};
pub use regret::{
    dynamic_bound, l_delta, optimized_eta0, path_length, sample_complexity, static_bound,
    BoundParams, RegretLedger, RegretRecord,
};

#[derive(Debug, Error, PartialEq)]
pub enum PreferenceError {
    #[error("feedback {0} outside [0, 1]")]
    FeedbackOutOfRange(f64),
    #[error("coordinate {index} of the estimate is {value}; updates need a strictly positive iterate")]
    NotInterior { index: usize, value: f64 },
    #[error("invalid preference config: {0}")]
    BadConfig(String),
    #[error("delta {delta} outside (0, 1/K] for K = {k}")]
    BadDelta { delta: f64, k: usize },
    #[error("empty selection has no aspect profile")]
    EmptySelection,
    #[error("no aspect vector for sentence {0}")]
    UnknownSentence(usize),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Mean,
    #[default]
    Ema,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreferenceConfig {
    pub eta0: f64,
    pub c_eta: f64,
    pub baseline: BaselineKind,
    pub ema_rho: f64,
    pub clip_c: f64,
    /// Interior floor δ. Only enforced when `project_to_floor` is set.
    pub delta_floor: f64,
    pub project_to_floor: bool,
}

impl Default for PreferenceConfig {
    fn default() -> Self {
        Self {
            eta0: 0.5,
            c_eta: 1.0,
            baseline: BaselineKind::Ema,
            ema_rho: 0.1,
            clip_c: 1.0,
            delta_floor: 1e-4,
            project_to_floor: false,
        }
    }
}

impl PreferenceConfig {
    pub fn validate(&self, k: usize) -> Result<(), PreferenceError> {
        let bad = |m: String| Err(PreferenceError::BadConfig(m));
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return bad(format!("eta0 must be positive, got {}", self.eta0));
        }
        if !(self.c_eta > 0.0 && self.c_eta.is_finite()) {
            return bad(format!("c_eta must be positive, got {}", self.c_eta));
        }
        if !(self.ema_rho > 0.0 && self.ema_rho <= 1.0) {
            return bad(format!("ema_rho must lie in (0, 1], got {}", self.ema_rho));
        }
        if !(self.clip_c > 0.0) {
            return bad(format!("clip_c must be positive, got {}", self.clip_c));
        }
        if !(self.delta_floor > 0.0 && self.delta_floor <= 1.0 / k as f64) {
            return Err(PreferenceError::BadDelta {
                delta: self.delta_floor,
                k,
            });
        }
        Ok(())
    }

    /// η_t = η₀ / √(1 + c_η·t).
    pub fn step_size(&self, round: u64) -> f64 {
        self.eta0 / (1.0 + self.c_eta * round as f64).sqrt()
    }
}

/// Centered rating together with the baseline it was measured against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Centered {
    pub f: f64,
    pub baseline: f64,
    pub f_tilde: f64,
    pub next_baseline: f64,
}

/// What one feedback round did to the estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub round: u64,
    pub centered: Centered,
    pub eta: f64,
    /// Surrogate loss of the pre-update estimate.
    pub loss: f64,
    pub w_pre: AspectVector,
    pub w_post: AspectVector,
    pub min_coord_pre: f64,
    pub min_coord_post: f64,
}

/// One user's learner. Snapshots serialize to JSON for persistence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceState {
    pub w_hat: AspectVector,
    /// Current round t ≥ 1; the next feedback is for this round.
    pub round: u64,
    pub baseline: f64,
    /// Σ of past ratings, for the running-mean baseline.
    pub feedback_sum: f64,
    pub config: PreferenceConfig,
}

impl PreferenceState {
    /// Uniform start ŵ₁ = (1/K, …, 1/K) with baseline b₁ = 0.5.
    pub fn new(k: usize, config: PreferenceConfig) -> Result<Self, PreferenceError> {
        if k == 0 {
            return Err(SimplexError::Empty.into());
        }
        config.validate(k)?;
        Ok(Self {
            w_hat: AspectVector::uniform(k),
            round: 1,
            baseline: 0.5,
            feedback_sum: 0.0,
            config,
        })
    }

    pub fn k(&self) -> usize {
        self.w_hat.dim()
    }

    pub fn eta(&self) -> f64 {
        self.config.step_size(self.round)
    }

    /// f̃ = clamp(f − b_t, −c, c) and the baseline b_{t+1} that follows.
    pub fn center(&self, f: f64) -> Result<Centered, PreferenceError> {
        if !(0.0..=1.0).contains(&f) {
            return Err(PreferenceError::FeedbackOutOfRange(f));
        }
        let c = self.config.clip_c;
        let f_tilde = (f - self.baseline).clamp(-c, c);
        let next_baseline = match self.config.baseline {
            BaselineKind::Ema => (1.0 - self.config.ema_rho) * self.baseline + self.config.ema_rho * f,
            BaselineKind::Mean => (self.feedback_sum + f) / self.round as f64,
        };
        Ok(Centered {
            f,
            baseline: self.baseline,
            f_tilde,
            next_baseline,
        })
    }

    /// The closed-form step at this round's η, without touching the state.
    pub fn omd_update(&self, f_tilde: f64, z: &AspectVector) -> Result<AspectVector, PreferenceError> {
        let next = exponentiated_gradient(&self.w_hat, f_tilde, z, self.eta())?;
        if self.config.project_to_floor {
            return Ok(project_to_floor(&next, self.config.delta_floor));
        }
        Ok(next)
    }

    /// Centers `f`, takes one OMD step on profile `z`, advances the baseline
    /// and the round counter.
    pub fn observe(&mut self, f: f64, z: &AspectVector) -> Result<StepRecord, PreferenceError> {
        let centered = self.center(f)?;
        let w_post = self.omd_update(centered.f_tilde, z)?;
        let record = StepRecord {
            round: self.round,
            centered,
            eta: self.eta(),
            loss: surrogate_loss(&self.w_hat, centered.f_tilde, z)?,
            min_coord_pre: self.w_hat.min_coordinate(),
            min_coord_post: w_post.min_coordinate(),
            w_pre: std::mem::replace(&mut self.w_hat, w_post.clone()),
            w_post,
        };
        self.baseline = centered.next_baseline;
        self.feedback_sum += f;
        self.round += 1;
        Ok(record)
    }
}

impl PreferenceState {
    /// Like [`observe`](Self::observe) but keeps ŵ fixed; the baseline and
    /// round still advance. Used by the non-adaptive comparison arms.
    pub fn observe_frozen(&mut self, f: f64, z: &AspectVector) -> Result<StepRecord, PreferenceError> {
        let centered = self.center(f)?;
        let record = StepRecord {
            round: self.round,
            centered,
            eta: self.eta(),
            loss: surrogate_loss(&self.w_hat, centered.f_tilde, z)?,
            min_coord_pre: self.w_hat.min_coordinate(),
            min_coord_post: self.w_hat.min_coordinate(),
            w_pre: self.w_hat.clone(),
            w_post: self.w_hat.clone(),
        };
        self.baseline = centered.next_baseline;
        self.feedback_sum += f;
        self.round += 1;
        Ok(record)
    }
}

/// ŵ'_k ∝ ŵ_k · exp(η·f̃·z_k), with the exponent shifted by its maximum.
pub fn exponentiated_gradient(
    w: &AspectVector,
    f_tilde: f64,
    z: &AspectVector,
    eta: f64,
) -> Result<AspectVector, PreferenceError> {
    if w.dim() != z.dim() {
        return Err(SimplexError::DimensionMismatch {
            left: w.dim(),
            right: z.dim(),
        }
        .into());
    }
    if let Some((index, &value)) = w.as_slice().iter().enumerate().find(|(_, &v)| v <= 0.0) {
        return Err(PreferenceError::NotInterior { index, value });
    }
    let exps: Vec<f64> = z.as_slice().iter().map(|zk| eta * f_tilde * zk).collect();
    let shift = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = w
        .as_slice()
        .iter()
        .zip(&exps)
        .map(|(wk, e)| wk * (e - shift).exp())
        .collect();
    Ok(AspectVector::from_weights(weights)?)
}

/// Clamps every coordinate up to δ and renormalizes.
pub fn project_to_floor(w: &AspectVector, delta: f64) -> AspectVector {
    let clamped: Vec<f64> = w.as_slice().iter().map(|&x| x.max(delta)).collect();
    AspectVector::from_weights(clamped).expect("clamped weights are positive")
}

/// ℓ(w) = −f̃·wᵀz.
pub fn surrogate_loss(w: &AspectVector, f_tilde: f64, z: &AspectVector) -> Result<f64, PreferenceError> {
    Ok(-f_tilde * w.dot(z)?)
}

/// ∇ℓ = −f̃·z.
pub fn gradient(f_tilde: f64, z: &AspectVector) -> Vec<f64> {
    z.as_slice().iter().map(|zk| -f_tilde * zk).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub a_pref: f64,
    pub a_evid: f64,
}

/// A_pref = cos(w_true, ŵ), A_evid = cos(w_true, z).
pub fn alignment_metrics(
    w_true: &AspectVector,
    w_hat: &AspectVector,
    z: &AspectVector,
) -> Result<Alignment, PreferenceError> {
    Ok(Alignment {
        a_pref: simplex::cosine(w_true.as_slice(), w_hat.as_slice())?,
        a_evid: simplex::cosine(w_true.as_slice(), z.as_slice())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> AspectVector {
        AspectVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn ema_centering_example() {
        let mut cfg = PreferenceConfig::default();
        cfg.ema_rho = 0.2;
        let s = PreferenceState::new(3, cfg).unwrap();
        let c = s.center(1.0).unwrap();
        assert_eq!(c.f_tilde, 0.5);
        assert!((c.next_baseline - 0.6).abs() < 1e-15);
        assert_eq!(s.center(0.5).unwrap().f_tilde, 0.0);
        assert!(matches!(s.center(1.2), Err(PreferenceError::FeedbackOutOfRange(_))));
    }

    #[test]
    fn clipping_caps_centered_feedback() {
        let mut s = PreferenceState::new(2, PreferenceConfig {
            clip_c: 0.8,
            ..Default::default()
        })
        .unwrap();
        s.baseline = 0.0;
        assert_eq!(s.center(1.0).unwrap().f_tilde, 0.8);
    }

    #[test]
    fn mean_baseline_tracks_running_average() {
        let mut s = PreferenceState::new(2, PreferenceConfig {
            baseline: BaselineKind::Mean,
            ..Default::default()
        })
        .unwrap();
        let z = AspectVector::uniform(2);
        for f in [0.2, 0.6, 1.0] {
            s.observe(f, &z).unwrap();
        }
        assert!((s.baseline - 0.6).abs() < 1e-15);
        assert_eq!(s.round, 4);
    }

    #[test]
    fn loss_examples() {
        let e0 = AspectVector::one_hot(3, 0);
        assert_eq!(surrogate_loss(&e0, 0.0, &e0).unwrap(), 0.0);
        assert!(gradient(0.0, &e0).iter().all(|&g| g == 0.0));
        assert_eq!(surrogate_loss(&e0, 1.0, &e0).unwrap(), -1.0);
        let u = AspectVector::uniform(3);
        assert!((surrogate_loss(&u, 0.5, &e0).unwrap() + 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_worked_example() {
        let u = AspectVector::uniform(3);
        let w = exponentiated_gradient(&u, 0.5, &AspectVector::one_hot(3, 0), 1.0).unwrap();
        let e = 0.5f64.exp();
        let want = [e / (e + 2.0), 1.0 / (e + 2.0), 1.0 / (e + 2.0)];
        for (a, b) in w.as_slice().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((w.as_slice()[0] - 0.45186).abs() < 1e-5);
        assert!((w.as_slice()[1] - 0.27407).abs() < 1e-5);
    }

    #[test]
    fn zero_feedback_and_uniform_profile_leave_estimate_alone() {
        let w = v(&[0.2, 0.3, 0.5]);
        let z = v(&[0.1, 0.6, 0.3]);
        assert_eq!(exponentiated_gradient(&w, 0.0, &z, 2.0).unwrap().as_slice(), w.as_slice());
        let same = exponentiated_gradient(&w, 0.9, &AspectVector::uniform(3), 2.0).unwrap();
        for (a, b) in same.as_slice().iter().zip(w.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn boundary_iterate_is_rejected() {
        let w = AspectVector::one_hot(2, 0);
        assert!(matches!(
            exponentiated_gradient(&w, 0.3, &w, 1.0),
            Err(PreferenceError::NotInterior { index: 1, .. })
        ));
    }

    #[test]
    fn step_size_uses_current_round() {
        let s = PreferenceState::new(2, PreferenceConfig::default()).unwrap();
        assert!((s.eta() - 0.5 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn floor_projection_lifts_small_coordinates() {
        let p = project_to_floor(&v(&[0.99999, 0.00001]), 0.01);
        assert!((p.as_slice()[1] - 0.01 / 1.00999).abs() < 1e-12);
    }

    #[test]
    fn delta_must_fit_the_simplex() {
        let cfg = PreferenceConfig {
            delta_floor: 0.6,
            ..Default::default()
        };
        assert!(matches!(PreferenceState::new(2, cfg), Err(PreferenceError::BadDelta { .. })));
    }

    #[test]
    fn alignment_examples() {
        let h = v(&[0.5, 0.5]);
        let a = alignment_metrics(&h, &h, &AspectVector::one_hot(2, 0)).unwrap();
        assert!((a.a_pref - 1.0).abs() < 1e-15);
        assert!((a.a_evid - 0.5f64.sqrt()).abs() < 1e-15);
        let b = alignment_metrics(&AspectVector::one_hot(2, 0), &h, &AspectVector::one_hot(2, 1)).unwrap();
        assert_eq!(b.a_evid, 0.0);
        assert!((b.a_pref - 0.70710678).abs() < 1e-8);
    }

    #[test]
    fn snapshot_round_trips() {
        let mut s = PreferenceState::new(4, PreferenceConfig::default()).unwrap();
        s.observe(0.9, &AspectVector::one_hot(4, 2)).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<PreferenceState>(&json).unwrap(), s);
    }

    fn simplex_point(k: usize) -> impl Strategy<Value = AspectVector> {
        prop::collection::vec(0.01f64..1.0, k).prop_map(|w| AspectVector::from_weights(w).unwrap())
    }

    fn pair() -> impl Strategy<Value = (AspectVector, AspectVector)> {
        (2usize..8).prop_flat_map(|k| (simplex_point(k), simplex_point(k)))
    }

    proptest! {
        #[test]
        fn update_stays_on_simplex((w, z) in pair(), f in -1.0f64..1.0, eta in 0.0f64..20.0) {
            let out = exponentiated_gradient(&w, f, &z, eta).unwrap();
            prop_assert!((out.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(out.as_slice().iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn positive_feedback_reinforces_emphasized_aspects(
            (w, z) in pair(), f in 0.01f64..1.0, eta in 0.01f64..5.0,
        ) {
            let pos = exponentiated_gradient(&w, f, &z, eta).unwrap();
            let neg = exponentiated_gradient(&w, -f, &z, eta).unwrap();
            let (w, z, pos, neg) = (w.as_slice(), z.as_slice(), pos.as_slice(), neg.as_slice());
            for k in 0..w.len() {
                for j in 0..w.len() {
                    if z[k] > z[j] + 1e-6 {
                        prop_assert!(pos[k] / pos[j] > w[k] / w[j]);
                        prop_assert!(neg[k] / neg[j] < w[k] / w[j]);
                    }
                }
            }
            let top = (0..z.len()).max_by(|&a, &b| z[a].total_cmp(&z[b])).unwrap();
            let low = z.iter().copied().fold(f64::INFINITY, f64::min);
            if z[top] > low + 1e-6 {
                prop_assert!(pos[top] > w[top]);
                prop_assert!(neg[top] < w[top]);
            }
        }

        #[test]
        fn loss_and_gradient_are_bounded((w, z) in pair(), f in -1.0f64..1.0, c in 0.05f64..1.0) {
            let ft = f.clamp(-c, c);
            prop_assert!(surrogate_loss(&w, ft, &z).unwrap().abs() <= ft.abs() + 1e-15);
            prop_assert!(gradient(ft, &z).iter().all(|g| g.abs() <= c + 1e-15));
        }

        #[test]
        fn bregman_of_entropy_is_kl((u, w) in pair()) {
            let b = simplex::entropy_bregman(u.as_slice(), w.as_slice()).unwrap();
            let kl = simplex::kl_divergence(u.as_slice(), w.as_slice()).unwrap();
            prop_assert!((b - kl).abs() < 1e-9);
        }
    }
}
