//! Synthetic user: a hidden preference sequence and noisy logistic feedback.

use serde::{Deserialize, Serialize};

use super::SimulationError;
use crate::rng::{CounterRng, StreamKind};
use crate::simplex::AspectVector;

/// Linear interpolation from `w_start` to `w_end` over `[t_begin, t_end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSchedule {
    pub w_start: AspectVector,
    pub w_end: AspectVector,
    pub t_begin: u64,
    pub t_end: u64,
}

impl DriftSchedule {
    pub fn new(w_start: AspectVector, w_end: AspectVector, t_begin: u64, t_end: u64) -> Result<Self, SimulationError> {
        let s = Self {
            w_start,
            w_end,
            t_begin,
            t_end,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.w_start.dim() != self.w_end.dim() {
            return Err(SimulationError::Config(format!(
                "drift endpoints have dimensions {} and {}",
                self.w_start.dim(),
                self.w_end.dim()
            )));
        }
        if self.t_begin > self.t_end {
            return Err(SimulationError::Config(format!(
                "drift window [{}, {}] is reversed",
                self.t_begin, self.t_end
            )));
        }
        Ok(())
    }

    /// ρ_t: 0 before the window, 1 after it, linear inside. A zero-width
    /// window switches at `t_begin`.
    pub fn rho(&self, t: u64) -> f64 {
        if t < self.t_begin {
            0.0
        } else if t >= self.t_end {
            1.0
        } else {
            (t - self.t_begin) as f64 / (self.t_end - self.t_begin) as f64
        }
    }

    pub fn at(&self, t: u64) -> AspectVector {
        let rho = self.rho(t);
        if rho == 0.0 {
            return self.w_start.clone();
        }
        if rho == 1.0 {
            return self.w_end.clone();
        }
        let mixed: Vec<f64> = self
            .w_start
            .as_slice()
            .iter()
            .zip(self.w_end.as_slice())
            .map(|(a, b)| (1.0 - rho) * a + rho * b)
            .collect();
        AspectVector::from_weights(mixed).expect("convex combination of simplex points")
    }
}

/// How the hidden preference is written in a config file. One-hot forms
/// are resolved once K is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpec {
    OneHot { index: usize },
    Stationary { w: AspectVector },
    OneHotDrift {
        from: usize,
        to: usize,
        t_begin: u64,
        t_end: u64,
    },
    Drift(DriftSchedule),
}

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec::OneHot { index: 0 }
    }
}

impl TargetSpec {
    pub fn resolve(&self, k: usize) -> Result<Target, SimulationError> {
        let one_hot = |i: usize| {
            if i < k {
                Ok(AspectVector::one_hot(k, i))
            } else {
                Err(SimulationError::Config(format!("aspect {i} out of range for K={k}")))
            }
        };
        let target = match self {
            TargetSpec::OneHot { index } => Target::Stationary(one_hot(*index)?),
            TargetSpec::Stationary { w } => Target::Stationary(w.clone()),
            TargetSpec::OneHotDrift {
                from,
                to,
                t_begin,
                t_end,
            } => Target::Drift(DriftSchedule::new(one_hot(*from)?, one_hot(*to)?, *t_begin, *t_end)?),
            TargetSpec::Drift(s) => {
                s.validate()?;
                Target::Drift(s.clone())
            }
        };
        if target.dim() != k {
            return Err(SimulationError::Config(format!(
                "oracle preference has dimension {} but K={k}",
                target.dim()
            )));
        }
        Ok(target)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Stationary(AspectVector),
    Drift(DriftSchedule),
}

impl Target {
    pub fn dim(&self) -> usize {
        match self {
            Target::Stationary(w) => w.dim(),
            Target::Drift(s) => s.w_start.dim(),
        }
    }

    pub fn at(&self, t: u64) -> AspectVector {
        match self {
            Target::Stationary(w) => w.clone(),
            Target::Drift(s) => s.at(t),
        }
    }

    /// Smallest coordinate the sequence ever takes. Values below the
    /// interior floor δ put the comparator outside the region the regret
    /// bounds cover.
    pub fn min_coordinate(&self) -> f64 {
        match self {
            Target::Stationary(w) => w.min_coordinate(),
            // the interpolation is coordinatewise monotone between endpoints
            Target::Drift(s) => s.w_start.min_coordinate().min(s.w_end.min_coordinate()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub target: TargetSpec,
    pub gamma: f64,
    pub sigma: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            target: TargetSpec::default(),
            gamma: 8.0,
            sigma: 0.05,
        }
    }
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackOracle {
    pub target: Target,
    pub gamma: f64,
    pub sigma: f64,
    noise: CounterRng,
}

impl FeedbackOracle {
    pub fn new(target: Target, gamma: f64, sigma: f64, seed: u64) -> Result<Self, SimulationError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(SimulationError::Config(format!("gamma must be positive, got {gamma}")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(SimulationError::Config(format!("sigma must be nonnegative, got {sigma}")));
        }
        Ok(Self {
            target,
            gamma,
            sigma,
            noise: CounterRng::new(seed, StreamKind::FeedbackNoise),
        })
    }

    pub fn from_config(cfg: &OracleConfig, k: usize, seed: u64) -> Result<Self, SimulationError> {
        Self::new(cfg.target.resolve(k)?, cfg.gamma, cfg.sigma, seed)
    }

    pub fn k(&self) -> usize {
        self.target.dim()
    }

    pub fn w_true(&self, t: u64) -> AspectVector {
        self.target.at(t)
    }

    /// q_t = w_tᵀz + ε_t with ε_t ~ N(0, σ²) drawn from round t's stream.
    pub fn utility(&self, t: u64, z: &AspectVector) -> Result<f64, SimulationError> {
        let clean = self.w_true(t).dot(z)?;
        let eps = if self.sigma == 0.0 {
            0.0
        } else {
            self.sigma * self.noise.standard_normal(t, 0)
        };
        Ok(clean + eps)
    }

    /// f_t = σ(γ·(q_t − 1/K)).
    pub fn feedback(&self, t: u64, z: &AspectVector) -> Result<f64, SimulationError> {
        let q = self.utility(t, z)?;
        Ok(logistic(self.gamma * (q - 1.0 / self.k() as f64)))
    }
}
