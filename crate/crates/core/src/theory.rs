//! Closed-form bounds, hyperparameter recipes and post-run certificates.

use crate::learners::{LearnerConfig, Noise};
use crate::math;
use crate::trace::RunTrace;
use crate::{Error, Result};

/// Uniform-convergence half-width for a finite class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundWidth {
    pub width: f64,
    /// The width exceeds 1, the range of the loss.
    pub vacuous: bool,
}

/// `9 sqrt((2 ln(|G||H|) + ln(8/delta)) / (n P_n(g)))`, where `n P_n(g)` is
/// `group_count`. Returned unclamped.
pub fn bound_width(
    n: usize,
    group_count: usize,
    num_groups: usize,
    num_hypotheses: usize,
    delta: f64,
) -> Result<BoundWidth> {
    if group_count == 0 {
        return Err(Error::EmptyGroup);
    }
    if group_count > n || num_groups == 0 || num_hypotheses == 0 {
        return Err(Error::invalid("need 1 <= group count <= n and non-empty classes"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta must lie in (0, 1)"));
    }
    let gh = num_groups as f64 * num_hypotheses as f64;
    let width = 9.0 * math::sqrt((2.0 * math::ln(gh) + math::ln(8.0 / delta)) / group_count as f64);
    Ok(BoundWidth {
        width,
        vacuous: width > 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// `lambda = 16 sqrt(32) eps^(2/3) (ln n)^(2/5)`.
    ShakyExpanded,
    /// `lambda = 16 sqrt(32) eps^(2/3)`.
    ShakySimple,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams {
    pub epsilon: f64,
    pub delta: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub provenance: Provenance,
    /// `n^(-2/5) ln n ln(24|G||H|/beta)^(2/5) ln(2n|G||H|/beta)^(1/5)`, the
    /// excess-risk rate as a multiplier of `1 / P_n(g)`, constants dropped.
    pub envelope: f64,
}

impl TheoryParams {
    /// Learner configuration using these `lambda` and `sigma`.
    pub fn learner_config(&self) -> LearnerConfig {
        LearnerConfig::new(self.lambda).with_sigma(self.sigma)
    }
}

/// Shaky Prepend parameters for confidence `1 - beta`:
///
/// - `delta = beta / (2 n |G| |H|)`
/// - `eps = n^(-3/5) (ln(4|G||H|/beta) sqrt(ln(1/delta)))^(3/5)`
/// - `lambda = 16 sqrt(32) eps^(2/3)`, times `(ln n)^(2/5)` unless `simple`
/// - `sigma = 4 sqrt(32 ln(1/delta)) / (n eps)`
pub fn recipe_shaky(
    n: usize,
    num_groups: usize,
    num_hypotheses: usize,
    beta: f64,
    simple: bool,
) -> Result<TheoryParams> {
    if n < 2 || num_groups == 0 || num_hypotheses == 0 {
        return Err(Error::invalid("need n >= 2 and non-empty classes"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid("beta must lie in (0, 1)"));
    }
    let nf = n as f64;
    let gh = num_groups as f64 * num_hypotheses as f64;
    let delta = beta / (2.0 * nf * gh);
    let ln_inv_delta = math::ln(2.0 * nf * gh / beta);
    let epsilon = math::powf(nf, -0.6) * math::powf(math::ln(4.0 * gh / beta) * math::sqrt(ln_inv_delta), 0.6);
    let mut lambda = 16.0 * math::sqrt(32.0) * math::powf(epsilon, 2.0 / 3.0);
    if !simple {
        lambda *= math::powf(math::ln(nf), 0.4);
    }
    let sigma = 4.0 * math::sqrt(32.0 * ln_inv_delta) / (nf * epsilon);
    let envelope = math::powf(nf, -0.4)
        * math::ln(nf)
        * math::powf(math::ln(24.0 * gh / beta), 0.4)
        * math::powf(ln_inv_delta, 0.2);
    Ok(TheoryParams {
        epsilon,
        delta,
        lambda,
        sigma,
        provenance: if simple {
            Provenance::ShakySimple
        } else {
            Provenance::ShakyExpanded
        },
        envelope,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupPrependRecipe {
    pub lambda: f64,
    /// `ln(8|G||H|/delta)^(1/3) n^(-1/3)`, the excess-risk rate as a
    /// multiplier of `1 / sqrt(P_n(g))`, constants dropped.
    pub envelope: f64,
}

/// `lambda = n^(-1/3) ln(8|G||H|/delta)^(1/3)`.
pub fn recipe_group_prepend(
    n: usize,
    num_groups: usize,
    num_hypotheses: usize,
    delta: f64,
) -> Result<GroupPrependRecipe> {
    if n < 2 || num_groups == 0 || num_hypotheses == 0 {
        return Err(Error::invalid("need n >= 2 and non-empty classes"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta must lie in (0, 1)"));
    }
    let gh = num_groups as f64 * num_hypotheses as f64;
    let lambda = math::powf(n as f64, -1.0 / 3.0) * math::powf(math::ln(8.0 * gh / delta), 1.0 / 3.0);
    Ok(GroupPrependRecipe {
        lambda,
        envelope: lambda,
    })
}

/// `e^(-lambda / (4 sigma)) 4 alpha / lambda`, the bound on
/// `Pr[B > 2 alpha / lambda]`.
pub fn update_tail_bound(lambda: f64, sigma: f64, alpha: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    math::exp(-lambda / (4.0 * sigma)) * 4.0 * alpha / lambda
}

/// `eps sqrt(2 alpha / lambda)`: privacy loss of a run with at most
/// `2 alpha / lambda` updates.
pub fn privacy_envelope(epsilon: f64, alpha: f64, lambda: f64) -> f64 {
    epsilon * math::sqrt(2.0 * alpha / lambda)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub lambda: f64,
    pub alpha: f64,
    pub num_updates: usize,
    pub max_abs_noise: f64,
    /// Every realized noise satisfied `|.| < lambda / 4`.
    pub small_noise: bool,
    /// `ceil(2 alpha / lambda)`.
    pub update_cap: usize,
    /// Whether `B <= update_cap`; `None` unless `small_noise`.
    pub cap_holds: Option<bool>,
    /// `a = max -mu` over the final sweep.
    pub a: f64,
    /// Threshold noise in force during the final sweep.
    pub xi_b: f64,
    /// `max_g` of the final-sweep acceptance statistic maximized over `h`;
    /// for full steps this is `P_n(g) (L_n(f_B|g) - min_h L_n(h|g))`.
    pub stopping_slack: f64,
    /// `lambda + a + xi_B`.
    pub slack_bound: f64,
    pub slack_holds: bool,
    pub noise_off: bool,
    /// With noise off: whether `B <= ceil(1 / lambda)`.
    pub noise_off_cap_holds: Option<bool>,
}

impl CertificateReport {
    /// A bound that should hold was violated.
    pub fn cap_violated(&self) -> bool {
        self.cap_holds == Some(false) || self.noise_off_cap_holds == Some(false)
    }
}

/// Checks a completed run against the update-count and stopping-slack
/// certificates.
pub fn certify_trace(trace: &RunTrace, config: &LearnerConfig) -> Result<CertificateReport> {
    if !trace.completed {
        return Err(Error::IncompleteTrace);
    }
    let last = trace.final_pass().ok_or(Error::IncompleteTrace)?;
    if last.chosen.is_some() {
        return Err(Error::IncompleteTrace);
    }
    let lambda = config.lambda;
    let max_abs_noise = trace.all_noises().fold(0.0f64, |m, v| m.max(v.abs()));
    let small_noise = max_abs_noise < lambda / 4.0;
    let update_cap = math::ceil(2.0 * trace.alpha / lambda) as usize;
    let cap_holds = small_noise.then_some(trace.num_updates <= update_cap);

    let a = last
        .query_noise
        .iter()
        .fold(f64::NEG_INFINITY, |m, &mu| m.max(-mu));
    let xi_b = last.threshold_noise;
    let stopping_slack = last
        .group_gaps
        .iter()
        .flatten()
        .fold(f64::NEG_INFINITY, |m, &s| m.max(s));
    let slack_bound = lambda + a + xi_b;
    // The final sweep compares s + mu < lambda + xi in floating point; allow
    // for the rounding of rearranging that comparison.
    let tol = 4.0 * f64::EPSILON * (1.0 + lambda.abs() + a.abs() + xi_b.abs() + stopping_slack.abs());
    let slack_holds = last.query_noise.is_empty() || stopping_slack <= slack_bound + tol;

    let noise_off = matches!(config.noise, Noise::Sigma(s) if s == 0.0);
    let noise_off_cap_holds = noise_off.then(|| trace.num_updates <= config.inverse_lambda_cap());
    Ok(CertificateReport {
        lambda,
        alpha: trace.alpha,
        num_updates: trace.num_updates,
        max_abs_noise,
        small_noise,
        update_cap,
        cap_holds,
        a,
        xi_b,
        stopping_slack,
        slack_bound,
        slack_holds,
        noise_off,
        noise_off_cap_holds,
    })
}
