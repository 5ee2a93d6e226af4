//! Counter-addressed random streams.
//!
//! Every random draw in selection and simulation is addressed by
//! `(seed, purpose, round, step, index)` instead of being pulled from a
//! shared sequential generator. ChaCha's 64-bit stream id and word position
//! give random access, so a draw never depends on how many draws happened
//! before it and any run can be replayed from its config.

use rand::distr::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What the stream is used for; keeps unrelated draws independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum StreamKind {
    Gumbel = 1,
    FeedbackNoise = 2,
    Sampling = 3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
    kind: StreamKind,
}

impl CounterRng {
    pub fn new(seed: u64, kind: StreamKind) -> Self {
        Self { seed, kind }
    }

    fn stream(&self, round: u64, step: u32) -> u64 {
        // 8 bits of purpose, 40 bits of round, 16 bits of step
        ((self.kind as u64) << 56) | ((round & 0xFF_FFFF_FFFF) << 16) | u64::from(step & 0xFFFF)
    }

    /// Uniform draw in the open interval (0, 1).
    pub fn uniform(&self, round: u64, step: u32, index: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream(round, step));
        // two 32-bit words per f64 draw
        rng.set_word_pos(u128::from(index) * 2);
        Open01.sample(&mut rng)
    }

    /// Standard Gumbel(0, 1) via the inverse CDF g = −log(−log U).
    pub fn gumbel(&self, round: u64, step: u32, index: u64) -> f64 {
        let u = self.uniform(round, step, index);
        -(-u.ln()).ln()
    }

    /// Standard normal via Box–Muller on two counter-addressed uniforms.
    pub fn standard_normal(&self, round: u64, step: u32) -> f64 {
        let u1 = self.uniform(round, step, 0);
        let u2 = self.uniform(round, step, 1);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
