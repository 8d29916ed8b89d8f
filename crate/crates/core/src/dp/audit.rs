//! Monte-Carlo privacy audit.
//!
//! A mechanism is run many times on two neighboring datasets and the
//! probabilities of transcript events are compared. The log ratio of the two
//! estimated probabilities is a noisy lower estimate of the privacy loss on
//! that event; Wilson intervals give it a margin. This is a sanity check, not a
//! proof of privacy.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::data::Dataset;
use crate::math::{self, mix64};
use crate::{Error, Result};

pub const MIN_TRIALS: usize = 10_000;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub hits: usize,
    pub trials: usize,
}

impl Proportion {
    pub fn estimate(&self) -> f64 {
        self.hits as f64 / self.trials as f64
    }

    /// Wilson score interval.
    pub fn wilson(&self, z: f64) -> (f64, f64) {
        let n = self.trials as f64;
        let p = self.estimate();
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = z * math::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
        ((center - half).max(0.0), (center + half).min(1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditEstimate {
    pub on_d: Proportion,
    pub on_d_prime: Proportion,
    pub ci_d: (f64, f64),
    pub ci_d_prime: (f64, f64),
    /// `max(ln(p_D / p_D'), ln(p_D' / p_D))`.
    pub ln_ratio: f64,
    /// Interval for the signed `ln(p_D / p_D')` from the Wilson bounds.
    pub signed_interval: (f64, f64),
    /// Sum of the two log-scale interval half-widths on the side realizing
    /// `ln_ratio`; `ln_ratio - slack` is the conservative lower estimate.
    pub slack: f64,
}

impl AuditEstimate {
    pub fn from_counts(on_d: Proportion, on_d_prime: Proportion, z: f64) -> Self {
        let (pd, pdp) = (on_d.estimate(), on_d_prime.estimate());
        let ci_d = on_d.wilson(z);
        let ci_d_prime = on_d_prime.wilson(z);
        let signed_interval = (
            math::ln(ci_d.0) - math::ln(ci_d_prime.1),
            math::ln(ci_d.1) - math::ln(ci_d_prime.0),
        );
        let fwd = math::ln(pd) - math::ln(pdp);
        let (ln_ratio, slack) = if fwd >= 0.0 {
            (
                fwd,
                (math::ln(pd) - math::ln(ci_d.0)) + (math::ln(ci_d_prime.1) - math::ln(pdp)),
            )
        } else {
            (
                -fwd,
                (math::ln(pdp) - math::ln(ci_d_prime.0)) + (math::ln(ci_d.1) - math::ln(pd)),
            )
        };
        AuditEstimate {
            on_d,
            on_d_prime,
            ci_d,
            ci_d_prime,
            ln_ratio,
            signed_interval,
            slack,
        }
    }

    pub fn p_d(&self) -> f64 {
        self.on_d.estimate()
    }

    pub fn p_d_prime(&self) -> f64 {
        self.on_d_prime.estimate()
    }

    pub fn interval_contains_zero(&self) -> bool {
        self.signed_interval.0 <= 0.0 && 0.0 <= self.signed_interval.1
    }

    pub fn lower_ln_ratio(&self) -> f64 {
        self.ln_ratio - self.slack
    }
}

/// Datasets must have equal size and differ in at most one record.
pub fn check_neighbors(d: &Dataset, d_prime: &Dataset) -> Result<()> {
    match d.differing_indices(d_prime) {
        None => Err(Error::NotNeighbors(format!(
            "sizes differ ({} vs {})",
            d.len(),
            d_prime.len()
        ))),
        Some(idx) if idx.len() > 1 => Err(Error::NotNeighbors(format!(
            "{} records differ",
            idx.len()
        ))),
        Some(_) => Ok(()),
    }
}

/// Transcripts of the trials on `D` and on `D'`.
pub type Transcripts = (Vec<Vec<bool>>, Vec<Vec<bool>>);

/// Seed for trial `index` of a run whose base seed is `base`.
pub fn trial_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64)
}

/// Runs the mechanism `trials` times on each dataset. Trial `i` on `D` uses
/// seed `seed + i`; on `D'` the stream is offset by `trials`, so the two
/// estimates are independent.
pub fn collect_transcripts<R>(runner: &R, d: &Dataset, d_prime: &Dataset, trials: usize, seed: u64) -> Result<Transcripts>
where
    R: Fn(&Dataset, u64) -> Vec<bool>,
{
    check_neighbors(d, d_prime)?;
    if trials < MIN_TRIALS {
        return Err(Error::invalid(format!("need at least {MIN_TRIALS} trials")));
    }
    let on_d = (0..trials).map(|i| runner(d, trial_seed(seed, i))).collect();
    let on_dp = (0..trials)
        .map(|i| runner(d_prime, trial_seed(seed, trials + i)))
        .collect();
    Ok((on_d, on_dp))
}

/// Estimates the probability of `event` under both datasets.
pub fn empirical_privacy_audit<R, E>(
    runner: R,
    d: &Dataset,
    d_prime: &Dataset,
    event: E,
    trials: usize,
    seed: u64,
) -> Result<AuditEstimate>
where
    R: Fn(&Dataset, u64) -> Vec<bool>,
    E: Fn(&[bool]) -> bool,
{
    let (td, tdp) = collect_transcripts(&runner, d, d_prime, trials, seed)?;
    Ok(estimate_event(&td, &tdp, &event))
}

pub fn estimate_event<E: Fn(&[bool]) -> bool>(on_d: &[Vec<bool>], on_dp: &[Vec<bool>], event: &E) -> AuditEstimate {
    let count = |ts: &[Vec<bool>]| Proportion {
        hits: ts.iter().filter(|t| event(t)).count(),
        trials: ts.len(),
    };
    AuditEstimate::from_counts(count(on_d), count(on_dp), Z95)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrefixEvent {
    /// Transcripts whose first `prefix.len()` answers equal `prefix`.
    /// Shorter transcripts equal to the whole prefix are included only when
    /// they have exactly that length.
    pub prefix: Vec<bool>,
    pub estimate: AuditEstimate,
}

/// Audits every prefix pattern of length up to `max_len` that occurs at least
/// `min_hits` times under both datasets.
pub fn audit_prefix_events(on_d: &[Vec<bool>], on_dp: &[Vec<bool>], max_len: usize, min_hits: usize) -> Vec<PrefixEvent> {
    let tally = |ts: &[Vec<bool>]| {
        let mut m: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
        for t in ts {
            for k in 1..=max_len.min(t.len()) {
                *m.entry(t[..k].to_vec()).or_default() += 1;
            }
        }
        m
    };
    let (a, b) = (tally(on_d), tally(on_dp));
    a.iter()
        .filter_map(|(prefix, &ha)| {
            let hb = *b.get(prefix)?;
            (ha >= min_hits && hb >= min_hits).then(|| PrefixEvent {
                prefix: prefix.clone(),
                estimate: AuditEstimate::from_counts(
                    Proportion {
                        hits: ha,
                        trials: on_d.len(),
                    },
                    Proportion {
                        hits: hb,
                        trials: on_dp.len(),
                    },
                    Z95,
                ),
            })
        })
        .collect()
}

/// Derives a seed for an independent stream `stream` from `base`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    mix64(base ^ mix64(stream))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Record;
    use crate::dp::laplace::LaplaceSampler;
    use alloc::vec;

    fn coin_runner(bias_on_first: f64) -> impl Fn(&Dataset, u64) -> Vec<bool> {
        move |d: &Dataset, seed: u64| {
            let mut s = LaplaceSampler::new(1.0, seed).unwrap();
            let shift = d.get(0).y * bias_on_first;
            vec![s.sample() + shift > 0.0, s.sample() > 0.0]
        }
    }

    #[test]
    fn wilson_contains_estimate() {
        let p = Proportion { hits: 30, trials: 100 };
        let (lo, hi) = p.wilson(Z95);
        assert!(lo < 0.3 && 0.3 < hi);
        let p = Proportion { hits: 100, trials: 100 };
        assert_eq!(p.wilson(Z95).1, 1.0);
    }

    #[test]
    fn non_neighbors_rejected() {
        let d = Dataset::from_xy(&[0.0, 1.0], &[0.0, 0.0]).unwrap();
        let far = Dataset::from_xy(&[5.0, 6.0], &[0.0, 0.0]).unwrap();
        let short = Dataset::from_xy(&[0.0], &[0.0]).unwrap();
        let r = coin_runner(0.0);
        assert!(matches!(
            empirical_privacy_audit(&r, &d, &far, |_| true, MIN_TRIALS, 0),
            Err(Error::NotNeighbors(_))
        ));
        assert!(empirical_privacy_audit(&r, &d, &short, |_| true, MIN_TRIALS, 0).is_err());
        assert!(empirical_privacy_audit(&r, &d, &d, |_| true, 10, 0).is_err());
    }

    #[test]
    fn identical_datasets_interval_contains_zero() {
        let d = Dataset::from_xy(&[0.0, 1.0], &[0.0, 0.0]).unwrap();
        let est = empirical_privacy_audit(coin_runner(1.0), &d, &d, |t| t[0], MIN_TRIALS, 5).unwrap();
        assert!(est.interval_contains_zero(), "{est:?}");
    }

    #[test]
    fn sure_event_has_unit_ratio() {
        let d = Dataset::from_xy(&[0.0, 1.0], &[0.0, 0.0]).unwrap();
        let dp = d.with_replaced(0, Record::scalar(0.0, 1.0)).unwrap();
        let est = empirical_privacy_audit(coin_runner(1.0), &d, &dp, |t| !t.is_empty(), MIN_TRIALS, 5).unwrap();
        assert_eq!(est.p_d(), 1.0);
        assert_eq!(est.p_d_prime(), 1.0);
        assert_eq!(est.ln_ratio, 0.0);
    }

    #[test]
    fn detects_a_shift() {
        // Lap(1) shifted by 1: P(X + 1 > 0) = 1 - e^{-1}/2, vs 1/2.
        let d = Dataset::from_xy(&[0.0], &[0.0]).unwrap();
        let dp = Dataset::from_xy(&[0.0], &[1.0]).unwrap();
        let est = empirical_privacy_audit(coin_runner(1.0), &d, &dp, |t| t[0], 50_000, 9).unwrap();
        let truth = libm::log((1.0 - libm::exp(-1.0) / 2.0) / 0.5);
        assert!((est.ln_ratio - truth).abs() < 0.05, "{est:?}");
        assert!(est.lower_ln_ratio() <= truth);
    }

    #[test]
    fn prefix_events_cover_both_answers() {
        let d = Dataset::from_xy(&[0.0], &[0.0]).unwrap();
        let r = coin_runner(0.0);
        let (a, b) = collect_transcripts(&r, &d, &d, MIN_TRIALS, 3).unwrap();
        let events = audit_prefix_events(&a, &b, 2, 10);
        // 2 patterns of length 1, 4 of length 2.
        assert_eq!(events.len(), 6);
        assert!(events.iter().all(|e| e.estimate.interval_contains_zero() || e.estimate.ln_ratio < 0.1));
    }
}
