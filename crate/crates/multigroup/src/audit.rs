//! Parallel Monte-Carlo privacy audit of Shaky Prepend.
//!
//! The mechanism's output is its sparse-vector transcript (`true` for each
//! crossing). Trials run in parallel; trial `i` on `D` uses seed
//! `seed + i` and trial `i` on `D'` uses `seed + trials + i`, as in the core
//! audit, so results match a sequential run exactly.

use multigroup_core::dp::audit::{
    audit_prefix_events, check_neighbors, estimate_event, trial_seed, Transcripts, MIN_TRIALS,
};
use multigroup_core::dp::{AuditEstimate, PrefixEvent};
use multigroup_core::learners::{shaky_prepend, LearnerConfig};
use multigroup_core::theory::{privacy_envelope, recipe_shaky, TheoryParams};
use multigroup_core::{
    BoundedLoss, Dataset, Error as CoreError, GroupFamily, HypothesisClass, Indicator, Instance,
    Record,
};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// A small instance with one neighbor: `n` points evenly spaced on `[0, 1)`
/// with labels 0 on the left half and 1 on the right, two half-line groups
/// and the constants 0 and 1. `D'` flips the label of the first record.
#[derive(Debug, Clone)]
pub struct AuditInstance {
    pub d: Dataset,
    pub d_prime: Dataset,
    pub groups: GroupFamily,
    pub hypotheses: HypothesisClass,
    pub loss: BoundedLoss,
}

impl AuditInstance {
    pub fn tiny(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::usage("audit instance needs n >= 2"));
        }
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| if x < 0.5 { 0.0 } else { 1.0 }).collect();
        let d = Dataset::from_xy(&xs, &ys)?;
        let d_prime = d.with_replaced(0, Record::scalar(xs[0], 1.0))?;
        Ok(AuditInstance {
            d,
            d_prime,
            groups: GroupFamily::new(vec![Indicator::half_open(0.0, 0.5), Indicator::interval(0.5, 1.0)])?,
            hypotheses: HypothesisClass::constants(&[0.0, 1.0])?,
            loss: BoundedLoss::ClampedSquared { scale: 1.0 },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub beta: f64,
    /// Replaces the recipe `lambda`; `sigma` stays at the recipe value.
    pub lambda: Option<f64>,
    /// Update cap of each run; a run that reaches it outputs its transcript
    /// so far.
    pub max_updates: usize,
    /// Longest transcript prefix audited.
    pub max_prefix: usize,
    /// Minimum occurrences of a prefix under both datasets.
    pub min_hits: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            n: 8,
            trials: 100_000,
            seed: 0,
            beta: 0.05,
            lambda: None,
            max_updates: 64,
            max_prefix: 6,
            min_hits: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditEvent {
    pub event: PrefixEvent,
    pub within_envelope: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub params: TheoryParams,
    pub lambda: f64,
    /// ERM loss on `D`.
    pub alpha: f64,
    /// `eps sqrt(2 alpha / lambda)`.
    pub envelope: f64,
    /// Sure event: transcript has at least one answer.
    pub sure: AuditEstimate,
    /// `D` against itself (independent seeds), on the same prefix events.
    pub identical: Vec<PrefixEvent>,
    pub events: Vec<AuditEvent>,
}

impl AuditReport {
    /// Every identical-dataset interval contains 0.
    pub fn identical_contains_zero(&self) -> bool {
        self.identical.iter().all(|e| e.estimate.interval_contains_zero())
    }

    /// Share of audited events whose `ln-ratio - slack` is within the
    /// envelope; 1 when no event qualifies.
    pub fn fraction_within(&self) -> f64 {
        if self.events.is_empty() {
            return 1.0;
        }
        self.events.iter().filter(|e| e.within_envelope).count() as f64 / self.events.len() as f64
    }
}

fn run_transcript(inst: &AuditInstance, data: &Dataset, cfg: &LearnerConfig, seed: u64) -> Result<Vec<bool>> {
    let cfg = cfg.with_seed(seed);
    match shaky_prepend(data, &inst.groups, &inst.hypotheses, inst.loss, &cfg) {
        Ok((_, t)) => Ok(t.transcript()),
        Err(CoreError::MaxIterations { trace, .. }) => Ok(trace.transcript()),
        Err(e) => Err(e.into()),
    }
}

/// Transcripts of `trials` runs on each dataset.
pub fn collect_parallel(
    inst: &AuditInstance,
    d: &Dataset,
    d_prime: &Dataset,
    cfg: &LearnerConfig,
    trials: usize,
    seed: u64,
) -> Result<Transcripts> {
    check_neighbors(d, d_prime)?;
    let on = |data: &Dataset, offset: usize| -> Result<Vec<Vec<bool>>> {
        (0..trials)
            .into_par_iter()
            .map(|i| run_transcript(inst, data, cfg, trial_seed(seed, offset + i)))
            .collect()
    };
    Ok((on(d, 0)?, on(d_prime, trials)?))
}

pub fn run_audit(config: &AuditConfig) -> Result<AuditReport> {
    if config.trials < MIN_TRIALS {
        return Err(Error::usage(format!("need at least {MIN_TRIALS} trials")));
    }
    if config.max_prefix == 0 || config.max_updates == 0 {
        return Err(Error::usage("max_prefix and max_updates must be at least 1"));
    }
    let inst = AuditInstance::tiny(config.n)?;
    let params = recipe_shaky(config.n, inst.groups.len(), inst.hypotheses.len(), config.beta, false)?;
    let lambda = config.lambda.unwrap_or(params.lambda);
    let cfg = LearnerConfig::new(lambda)
        .with_sigma(params.sigma)
        .with_max_iters(config.max_updates);
    let alpha = Instance::new(&inst.d, &inst.groups, &inst.hypotheses, inst.loss).erm().1;
    let envelope = privacy_envelope(params.epsilon, alpha, lambda);

    let (td, tdp) = collect_parallel(&inst, &inst.d, &inst.d_prime, &cfg, config.trials, config.seed)?;
    let sure = estimate_event(&td, &tdp, &|t: &[bool]| !t.is_empty());
    let events = audit_prefix_events(&td, &tdp, config.max_prefix, config.min_hits)
        .into_iter()
        .map(|event| AuditEvent {
            within_envelope: event.estimate.lower_ln_ratio() <= envelope,
            event,
        })
        .collect();

    let (same_a, same_b) = collect_parallel(&inst, &inst.d, &inst.d, &cfg, config.trials, config.seed)?;
    let identical = audit_prefix_events(&same_a, &same_b, config.max_prefix, config.min_hits);

    Ok(AuditReport {
        params,
        lambda,
        alpha,
        envelope,
        sure,
        identical,
        events,
    })
}

fn bits(prefix: &[bool]) -> String {
    prefix.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Plain-text table, one line per audited event.
pub fn format_report(r: &AuditReport) -> String {
    let mut s = format!(
        "eps = {}\ndelta = {}\nlambda = {}\nsigma = {}\nalpha = {}\nenvelope = {}\n",
        r.params.epsilon, r.params.delta, r.lambda, r.params.sigma, r.alpha, r.envelope
    );
    let worst = r
        .identical
        .iter()
        .map(|e| e.estimate.ln_ratio)
        .fold(0.0f64, f64::max);
    s.push_str(&format!(
        "identical datasets: {} events, largest ln-ratio {:.4}, all intervals contain 0: {}\n",
        r.identical.len(),
        worst,
        r.identical_contains_zero()
    ));
    s.push_str(&format!(
        "{:<8} {:>10} {:>10} {:>9} {:>9} {:>22} {:>7}\n",
        "prefix", "p_D", "p_D'", "ln-ratio", "slack", "signed interval", "within"
    ));
    for e in &r.events {
        let est = &e.event.estimate;
        s.push_str(&format!(
            "{:<8} {:>10.6} {:>10.6} {:>9.4} {:>9.4} {:>10.4},{:>10.4}  {:>7}\n",
            bits(&e.event.prefix),
            est.p_d(),
            est.p_d_prime(),
            est.ln_ratio,
            est.slack,
            est.signed_interval.0,
            est.signed_interval.1,
            e.within_envelope
        ));
    }
    s.push_str(&format!(
        "events within envelope: {}/{} ({:.3})\n",
        r.events.iter().filter(|e| e.within_envelope).count(),
        r.events.len(),
        r.fraction_within()
    ));
    s
}

/// CSV lines `prefix,p_d,p_d_prime,ln_ratio,slack,lo,hi,within`.
pub fn report_csv(r: &AuditReport) -> String {
    let mut s = String::from("prefix,p_d,p_d_prime,ln_ratio,slack,interval_lo,interval_hi,envelope,within\n");
    for e in &r.events {
        let est = &e.event.estimate;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            bits(&e.event.prefix),
            est.p_d(),
            est.p_d_prime(),
            est.ln_ratio,
            est.slack,
            est.signed_interval.0,
            est.signed_interval.1,
            r.envelope,
            e.within_envelope
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use multigroup_core::dp::audit::collect_transcripts;

    #[test]
    fn tiny_instance_is_a_neighbor_pair() {
        let i = AuditInstance::tiny(8).unwrap();
        assert_eq!(i.d.differing_indices(&i.d_prime).unwrap(), vec![0]);
    }

    #[test]
    fn parallel_collection_matches_sequential() {
        let inst = AuditInstance::tiny(8).unwrap();
        let cfg = LearnerConfig::new(0.3).with_sigma(0.2).with_max_iters(16);
        let trials = MIN_TRIALS;
        let (a, b) = collect_parallel(&inst, &inst.d, &inst.d_prime, &cfg, trials, 5).unwrap();
        let runner = |d: &Dataset, s: u64| run_transcript(&inst, d, &cfg, s).unwrap();
        let (sa, sb) = collect_transcripts(&runner, &inst.d, &inst.d_prime, trials, 5).unwrap();
        assert_eq!((a, b), (sa, sb));
    }

    #[test]
    fn too_few_trials_is_a_usage_error() {
        let cfg = AuditConfig {
            trials: 10,
            ..AuditConfig::default()
        };
        assert!(matches!(run_audit(&cfg), Err(Error::Usage(_))));
    }
}
