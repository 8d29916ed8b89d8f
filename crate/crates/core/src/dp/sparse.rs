//! The generalized sparse-vector mechanism: threshold queries answered with
//! Laplace noise, paying privacy only for threshold crossings, with a
//! pluggable stopping rule.
//!
//! Noise is drawn in a fixed order: one `Lap(sigma)` threshold draw at
//! construction, one `Lap(2 sigma)` draw per query, and a fresh threshold draw
//! immediately after each crossing.

use alloc::vec::Vec;

use super::laplace::LaplaceSampler;
use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Answer {
    /// Threshold crossed.
    Above,
    Below,
}

/// Counters the stopping rule is evaluated on, after each answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopContext {
    pub count: usize,
    pub since_last_update: usize,
    pub total_queries: usize,
}

#[derive(Debug, Clone, Copy)]
pub enum StoppingRule {
    Never,
    /// Halt once `count >= c` (the classical cutoff).
    CountAtLeast(usize),
    /// Halt once `count > c`.
    CountExceeds(usize),
    /// Halt after `m` consecutive answers below threshold. With `m = |G||H|`
    /// this is the Shaky Prepend rule: a full sweep without a crossing.
    QuietQueries(usize),
    Custom(fn(&StopContext) -> bool),
}

impl StoppingRule {
    pub fn should_stop(&self, ctx: &StopContext) -> bool {
        match *self {
            StoppingRule::Never => false,
            StoppingRule::CountAtLeast(c) => ctx.count >= c,
            StoppingRule::CountExceeds(c) => ctx.count > c,
            StoppingRule::QuietQueries(m) => ctx.since_last_update >= m,
            StoppingRule::Custom(f) => f(ctx),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SparseConfig {
    pub threshold: f64,
    pub stopping_rule: StoppingRule,
    sigma: f64,
}

impl SparseConfig {
    /// Noise scale calibrated to `Delta`-sensitive queries:
    /// `sigma = Delta * sqrt(32 ln(1/delta)) / epsilon`.
    pub fn from_privacy(
        sensitivity: f64,
        threshold: f64,
        epsilon: f64,
        delta: f64,
        stopping_rule: StoppingRule,
    ) -> Result<Self> {
        if !(sensitivity > 0.0) || !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(
                "need sensitivity > 0, epsilon > 0 and delta in (0, 1)",
            ));
        }
        Self::with_noise_scale(threshold, noise_scale(sensitivity, epsilon, delta), stopping_rule)
    }

    /// Explicit noise scale; zero selects the noise-off mode.
    pub fn with_noise_scale(threshold: f64, sigma: f64, stopping_rule: StoppingRule) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() || !threshold.is_finite() {
            return Err(Error::invalid("sigma must be finite and non-negative"));
        }
        Ok(SparseConfig {
            threshold,
            stopping_rule,
            sigma,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// `Delta * sqrt(32 ln(1/delta)) / epsilon`.
pub fn noise_scale(sensitivity: f64, epsilon: f64, delta: f64) -> f64 {
    sensitivity * math::sqrt(32.0 * math::ln(1.0 / delta)) / epsilon
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranscriptEntry {
    pub answer: Answer,
    pub query_noise: f64,
}

/// Mechanism state. Owns its sampler so that the draw order is fixed.
#[derive(Debug, Clone)]
pub struct SparseState {
    config: SparseConfig,
    sampler: LaplaceSampler,
    count: usize,
    since_last_update: usize,
    // xi_0, xi_1, ...: one per threshold in force so far
    threshold_noises: Vec<f64>,
    transcript: Vec<TranscriptEntry>,
    halted: bool,
}

impl SparseState {
    /// Initializes the mechanism, drawing the first threshold noise.
    pub fn new(config: SparseConfig, seed: u64) -> Result<Self> {
        let mut sampler = LaplaceSampler::with_scale_or_off(config.sigma, seed)?;
        let xi0 = sampler.sample();
        Ok(SparseState {
            config,
            sampler,
            count: 0,
            since_last_update: 0,
            threshold_noises: alloc::vec![xi0],
            transcript: Vec::new(),
            halted: false,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    /// The current noisy threshold.
    pub fn noisy_threshold(&self) -> f64 {
        self.config.threshold + self.current_threshold_noise()
    }

    pub fn current_threshold_noise(&self) -> f64 {
        *self.threshold_noises.last().expect("initialized")
    }

    pub fn threshold_noises(&self) -> &[f64] {
        &self.threshold_noises
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    /// `true` for each crossing.
    pub fn answers(&self) -> Vec<bool> {
        self.transcript
            .iter()
            .map(|e| e.answer == Answer::Above)
            .collect()
    }

    /// Answers one query.
    pub fn step(&mut self, query_value: f64) -> Result<Answer> {
        if self.halted {
            return Err(Error::Halted);
        }
        let mu = self.sampler.sample_scaled(2.0);
        let answer = if query_value + mu >= self.noisy_threshold() {
            self.count += 1;
            self.since_last_update = 0;
            let xi = self.sampler.sample();
            self.threshold_noises.push(xi);
            Answer::Above
        } else {
            self.since_last_update += 1;
            Answer::Below
        };
        self.transcript.push(TranscriptEntry {
            answer,
            query_noise: mu,
        });
        let ctx = StopContext {
            count: self.count,
            since_last_update: self.since_last_update,
            total_queries: self.transcript.len(),
        };
        if self.config.stopping_rule.should_stop(&ctx) {
            self.halted = true;
        }
        Ok(answer)
    }
}

/// Free-function form of [`SparseState::step`].
pub fn sparse_step(state: &mut SparseState, query_value: f64) -> Result<Answer> {
    state.step(query_value)
}
