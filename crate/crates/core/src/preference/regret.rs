//! Regret bookkeeping and the closed-form regret bounds of entropic OMD.

use serde::{Deserialize, Serialize};

use super::PreferenceError;
use crate::simplex::{l1_distance, AspectVector};

/// Parameters of the regret bounds: feedback clip c, interior floor δ,
/// step decay c_η and initial step η₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub c: f64,
    pub delta: f64,
    pub c_eta: f64,
    pub eta0: f64,
}

impl BoundParams {
    /// Uses the η₀ that minimizes the static bound.
    pub fn optimized(c: f64, delta: f64, c_eta: f64) -> Self {
        Self {
            c,
            delta,
            c_eta,
            eta0: optimized_eta0(c, delta, c_eta),
        }
    }

    pub fn validate(&self, k: usize) -> Result<(), PreferenceError> {
        if !(self.delta > 0.0 && self.delta <= 1.0 / k as f64) {
            return Err(PreferenceError::BadDelta {
                delta: self.delta,
                k,
            });
        }
        if !(self.c > 0.0 && self.c_eta > 0.0 && self.eta0 > 0.0) {
            return Err(PreferenceError::BadConfig(format!(
                "bound parameters must be positive: c={}, c_eta={}, eta0={}",
                self.c, self.c_eta, self.eta0
            )));
        }
        Ok(())
    }
}

/// L_δ = 1 + log(1/δ).
pub fn l_delta(delta: f64) -> f64 {
    1.0 + (1.0 / delta).ln()
}

/// η₀* = √(c_η·log(1/δ)) / c.
pub fn optimized_eta0(c: f64, delta: f64, c_eta: f64) -> f64 {
    (c_eta * (1.0 / delta).ln()).sqrt() / c
}

/// (log(1/δ)/η₀ + c²η₀/c_η)·√(1 + c_η·T)
pub fn static_bound(p: &BoundParams, t: u64) -> f64 {
    dynamic_bound(p, t, 0.0)
}

/// ((log(1/δ) + L_δ·V_T)/η₀ + c²η₀/c_η)·√(1 + c_η·T)
pub fn dynamic_bound(p: &BoundParams, t: u64, path_length: f64) -> f64 {
    let a = (1.0 / p.delta).ln() + l_delta(p.delta) * path_length;
    (a / p.eta0 + p.c * p.c * p.eta0 / p.c_eta) * (1.0 + p.c_eta * t as f64).sqrt()
}

/// Smallest integer horizon T with
/// T ≥ (2/ε²)(c²A + √(c⁴A² + ε²c²A/c_η)), A = log(1/δ) + L_δ·V.
/// With V = 0 this is the stationary sample complexity.
pub fn sample_complexity(c: f64, delta: f64, c_eta: f64, epsilon: f64, path_length: f64) -> u64 {
    let a = (1.0 / delta).ln() + l_delta(delta) * path_length;
    let c2 = c * c;
    let e2 = epsilon * epsilon;
    let t = 2.0 / e2 * (c2 * a + (c2 * c2 * a * a + e2 * c2 * a / c_eta).sqrt());
    t.ceil() as u64
}

/// V = Σ_{t≥2} ‖w_t − w_{t−1}‖₁.
pub fn path_length(sequence: &[AspectVector]) -> f64 {
    sequence
        .windows(2)
        .map(|w| l1_distance(w[1].as_slice(), w[0].as_slice()).expect("same dimension"))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRecord {
    pub round: u64,
    pub f: f64,
    pub baseline: f64,
    pub f_tilde: f64,
    /// ℓ_t(ŵ_t), the learner's loss before its update.
    pub loss: f64,
    /// ℓ_t(w_t), the comparator's loss.
    pub loss_comparator: f64,
    pub z: AspectVector,
    pub w_true: AspectVector,
    pub min_coord_pre: f64,
    pub min_coord_post: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    pub params: BoundParams,
    pub records: Vec<RegretRecord>,
    cumulative: f64,
    path: f64,
}

impl RegretLedger {
    pub fn new(params: BoundParams) -> Self {
        Self {
            params,
            records: Vec::new(),
            cumulative: 0.0,
            path: 0.0,
        }
    }

    pub fn push(&mut self, record: RegretRecord) {
        if let Some(prev) = self.records.last() {
            self.path += l1_distance(record.w_true.as_slice(), prev.w_true.as_slice())
                .expect("comparators share a dimension");
        }
        self.cumulative += record.loss - record.loss_comparator;
        self.records.push(record);
    }

    /// Appends another ledger's rounds, counting the jump between the two
    /// comparator sequences towards V_T.
    pub fn extend(&mut self, other: RegretLedger) {
        for r in other.records {
            self.push(r);
        }
    }

    pub fn rounds(&self) -> u64 {
        self.records.len() as u64
    }

    /// Σ ℓ_t(ŵ_t) − Σ ℓ_t(w_t).
    pub fn regret(&self) -> f64 {
        self.cumulative
    }

    pub fn average_regret(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.cumulative / self.records.len() as f64
        }
    }

    pub fn path_length(&self) -> f64 {
        self.path
    }

    pub fn static_bound(&self) -> f64 {
        static_bound(&self.params, self.rounds())
    }

    pub fn dynamic_bound(&self) -> f64 {
        dynamic_bound(&self.params, self.rounds(), self.path)
    }
}
