//! The Prepend family of multi-group learners and a sleeping-experts baseline.
//!
//! Every Prepend-style learner starts from the ERM hypothesis and repeatedly
//! looks for a pair `(g, h)` whose update `f <- f + eta * g * (h - f)` lowers
//! the conditional loss on `g` by at least `lambda`:
//!
//! | learner        | statistic                          | selection        |
//! |----------------|------------------------------------|------------------|
//! | Prepend        | `L(f|g) - L(f'|g)`                 | argmax           |
//! | Group Prepend  | `P(g) (L(f|g) - L(f'|g))`          | argmax           |
//! | Shaky Prepend  | `P(g) (L(f|g) - L(f'|g)) + Lap`    | first crossing   |
//!
//! where `f'` is the stepped predictor (`f' = h` on `g` when `eta = 1`).
//! Groups with no members in the sample are skipped.

mod prepend;
mod shaky;
pub mod sleeping;

use core::fmt;
use core::str::FromStr;

use alloc::string::String;

use crate::chain::UpdateChain;
use crate::data::Dataset;
use crate::dp::sparse::noise_scale;
use crate::group::GroupFamily;
use crate::hypothesis::HypothesisClass;
use crate::instance::Instance;
use crate::loss::BoundedLoss;
use crate::math;
use crate::trace::RunTrace;
use crate::{Error, Result};

pub use prepend::{fractional_group_prepend, fractional_prepend, group_prepend, prepend};
pub use shaky::{fractional_shaky_prepend, shaky_prepend};
pub use sleeping::{sleeping_expert, SleepingConfig, SleepingPredictor, SleepingTrace};

/// How the Shaky Prepend noise scale is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    Sigma(f64),
    /// `sigma = 4 sqrt(32 ln(1/delta)) / (n epsilon)`: the sparse-vector
    /// calibration for the `4/n`-sensitive weighted-gap queries.
    Privacy { epsilon: f64, delta: f64 },
}

impl Noise {
    pub fn resolve(&self, n: usize) -> Result<f64> {
        match *self {
            Noise::Sigma(s) if s >= 0.0 && s.is_finite() => Ok(s),
            Noise::Sigma(_) => Err(Error::invalid("sigma must be finite and non-negative")),
            Noise::Privacy { epsilon, delta } => {
                if !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
                    return Err(Error::invalid("need epsilon > 0 and delta in (0, 1)"));
                }
                Ok(noise_scale(4.0 / n as f64, epsilon, delta))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    pub lambda: f64,
    pub noise: Noise,
    /// Step size in `(0, 1]`; only the fractional variants read it.
    pub eta: f64,
    /// Update cap; `None` picks a default that depends on the learner.
    pub max_iters: Option<usize>,
    pub seed: u64,
}

impl LearnerConfig {
    pub fn new(lambda: f64) -> Self {
        LearnerConfig {
            lambda,
            noise: Noise::Sigma(0.0),
            eta: 1.0,
            max_iters: None,
            seed: 0,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.noise = Noise::Sigma(sigma);
        self
    }

    pub fn with_privacy(mut self, epsilon: f64, delta: f64) -> Self {
        self.noise = Noise::Privacy { epsilon, delta };
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iters(mut self, cap: usize) -> Self {
        self.max_iters = Some(cap);
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid("lambda must be positive and finite"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::invalid("eta must lie in (0, 1]"));
        }
        Ok(())
    }

    /// `ceil(1 / lambda)`.
    pub fn inverse_lambda_cap(&self) -> usize {
        math::ceil(1.0 / self.lambda) as usize
    }
}

/// Base algorithm of a fractional variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Base {
    Prepend,
    GroupPrepend,
    Shaky,
}

/// Runs the fractional variant of `base` with step size `config.eta`.
pub fn fractional_variant(
    base: Base,
    data: &Dataset,
    groups: &GroupFamily,
    hypotheses: &HypothesisClass,
    loss: BoundedLoss,
    config: &LearnerConfig,
) -> Result<(UpdateChain, RunTrace)> {
    match base {
        Base::Prepend => fractional_prepend(data, groups, hypotheses, loss, config),
        Base::GroupPrepend => fractional_group_prepend(data, groups, hypotheses, loss, config),
        Base::Shaky => fractional_shaky_prepend(data, groups, hypotheses, loss, config),
    }
}

/// Every learner, by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Prepend,
    GroupPrepend,
    Shaky,
    FractionalPrepend,
    FractionalGroupPrepend,
    FractionalShaky,
    SleepingExpert,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Prepend,
        Method::GroupPrepend,
        Method::Shaky,
        Method::FractionalPrepend,
        Method::FractionalGroupPrepend,
        Method::FractionalShaky,
        Method::SleepingExpert,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Prepend => "prepend",
            Method::GroupPrepend => "group_prepend",
            Method::Shaky => "shaky",
            Method::FractionalPrepend => "frac_prepend",
            Method::FractionalGroupPrepend => "frac_group_prepend",
            Method::FractionalShaky => "frac_shaky",
            Method::SleepingExpert => "sleeping_expert",
        }
    }

    pub fn is_noisy(&self) -> bool {
        matches!(self, Method::Shaky | Method::FractionalShaky)
    }

    pub fn is_fractional(&self) -> bool {
        matches!(
            self,
            Method::FractionalPrepend | Method::FractionalGroupPrepend | Method::FractionalShaky
        )
    }

    /// Whether the acceptance statistic is weighted by `P_n(g)`.
    pub fn is_weighted(&self) -> bool {
        !matches!(
            self,
            Method::Prepend | Method::FractionalPrepend | Method::SleepingExpert
        )
    }

    /// Runs a chain-producing learner. Sleeping experts return a randomized
    /// predictor instead; use [`sleeping_expert`] for it.
    pub fn fit_chain(
        &self,
        data: &Dataset,
        groups: &GroupFamily,
        hypotheses: &HypothesisClass,
        loss: BoundedLoss,
        config: &LearnerConfig,
    ) -> Result<(UpdateChain, RunTrace)> {
        match self {
            Method::Prepend => prepend(data, groups, hypotheses, loss, config),
            Method::GroupPrepend => group_prepend(data, groups, hypotheses, loss, config),
            Method::Shaky => shaky_prepend(data, groups, hypotheses, loss, config),
            Method::FractionalPrepend => fractional_prepend(data, groups, hypotheses, loss, config),
            Method::FractionalGroupPrepend => {
                fractional_group_prepend(data, groups, hypotheses, loss, config)
            }
            Method::FractionalShaky => {
                fractional_shaky_prepend(data, groups, hypotheses, loss, config)
            }
            Method::SleepingExpert => Err(Error::invalid(
                "sleeping experts produce a randomized predictor, not a chain",
            )),
        }
    }
}

impl Method {
    /// As [`Method::fit_chain`], on an instance built once and shared, for
    /// example across a hyperparameter grid.
    pub fn fit_instance(
        &self,
        inst: &Instance<'_>,
        config: &LearnerConfig,
    ) -> Result<(UpdateChain, RunTrace)> {
        match self {
            Method::Prepend => prepend::run_argmax(inst, config, 1.0, false),
            Method::GroupPrepend => prepend::run_argmax(inst, config, 1.0, true),
            Method::Shaky => shaky::run_shaky(inst, config, 1.0),
            Method::FractionalPrepend => prepend::run_argmax(inst, config, config.eta, false),
            Method::FractionalGroupPrepend => prepend::run_argmax(inst, config, config.eta, true),
            Method::FractionalShaky => shaky::run_shaky(inst, config, config.eta),
            Method::SleepingExpert => Err(Error::invalid(
                "sleeping experts produce a randomized predictor, not a chain",
            )),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .map(|c| if c == '-' { '_' } else { c.to_ascii_lowercase() })
            .collect();
        Ok(match norm.as_str() {
            "prepend" => Method::Prepend,
            "group_prepend" | "group" => Method::GroupPrepend,
            "shaky" | "shaky_prepend" => Method::Shaky,
            "frac_prepend" | "fractional_prepend" => Method::FractionalPrepend,
            "frac_group_prepend" | "fractional_group_prepend" => Method::FractionalGroupPrepend,
            "frac_shaky" | "fractional_shaky" | "fractional_shaky_prepend" => {
                Method::FractionalShaky
            }
            "sleeping" | "sleeping_expert" | "sleeping_experts" => Method::SleepingExpert,
            _ => return Err(Error::invalid(alloc::format!("unknown method `{s}`"))),
        })
    }
}

/// Acceptance statistics of every `(g, h)` with `g` non-empty, group-major,
/// plus the per-group maximum.
pub(crate) struct Sweep {
    pub stats: alloc::vec::Vec<f64>,
    pub group_gaps: alloc::vec::Vec<Option<f64>>,
}

/// Appends the statistics of `(g, h)` for every `h` to `out` and returns
/// their maximum.
pub(crate) fn group_row(
    inst: &Instance<'_>,
    state: &crate::instance::FitState,
    g: usize,
    eta: f64,
    weighted: bool,
    out: &mut alloc::vec::Vec<f64>,
) -> f64 {
    let lf = state.group_loss(inst, g);
    let count = inst.count(g);
    let mut best = f64::NEG_INFINITY;
    for h in 0..inst.hypotheses.len() {
        let lh = state.stepped_group_loss(inst, g, h, eta);
        let s = if weighted {
            crate::risk::weighted(count, inst.n(), lf, lh)
        } else {
            lf - lh
        };
        best = best.max(s);
        out.push(s);
    }
    best
}

pub(crate) fn sweep(
    inst: &Instance<'_>,
    state: &crate::instance::FitState,
    eta: f64,
    weighted: bool,
) -> Sweep {
    let mut stats = alloc::vec::Vec::with_capacity(inst.nonempty_groups().len() * inst.hypotheses.len());
    let mut group_gaps = alloc::vec![None; inst.groups.len()];
    for &g in inst.nonempty_groups() {
        group_gaps[g] = Some(group_row(inst, state, g, eta, weighted, &mut stats));
    }
    Sweep { stats, group_gaps }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("group-prepend".parse::<Method>().unwrap(), Method::GroupPrepend);
        assert!("nope".parse::<Method>().is_err());
    }

    #[test]
    fn privacy_noise_scale() {
        let n = 100;
        let s = Noise::Privacy {
            epsilon: 0.5,
            delta: 1e-3,
        }
        .resolve(n)
        .unwrap();
        let expected = 4.0 * libm::sqrt(32.0 * libm::log(1e3)) / (n as f64 * 0.5);
        assert!((s - expected).abs() < 1e-14);
        assert!(Noise::Sigma(-1.0).resolve(n).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(LearnerConfig::new(0.0).validate().is_err());
        assert!(LearnerConfig::new(0.1).with_eta(0.0).validate().is_err());
        assert!(LearnerConfig::new(0.1).with_eta(1.5).validate().is_err());
        assert!(LearnerConfig::new(0.1).with_eta(0.5).validate().is_ok());
        assert_eq!(LearnerConfig::new(0.3).inverse_lambda_cap(), 4);
    }
}
