//! Sleeping-experts baseline.
//!
//! Experts are the pairs `(g, h)`; expert `(g, h)` is awake on `x` when
//! `g(x) = 1` and then predicts `h(x)`. One pass is made over a shuffled copy
//! of the sample. At each step the awake experts' weights are multiplied by
//! `exp(-lr * loss)` and rescaled so that their total is unchanged, which
//! leaves sleeping experts unaffected. The aggregate rule at step `t`
//! predicts the weighted mean of the awake experts under the weights held
//! before step `t`. The returned predictor is the uniform mixture of the
//! per-step rules; a prediction averages (or, for classification,
//! majority-votes) a fixed number of rules sampled from the mixture.
//!
//! Implementation choices:
//! - at most `max_rules` evenly spaced steps are kept as mixture components;
//! - rules are sampled with a seed derived from `x`, so predictions are
//!   deterministic;
//! - when no expert is awake at `x`, the ERM hypothesis is used.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::group::GroupFamily;
use crate::hypothesis::HypothesisClass;
use crate::instance::Instance;
use crate::loss::BoundedLoss;
use crate::math::{self, mix64};
use crate::risk::Predict;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SleepingConfig {
    pub learning_rate: f64,
    pub seed: u64,
    /// Rules sampled per prediction.
    pub samples: usize,
    /// Largest number of per-step rules kept in the mixture.
    pub max_rules: usize,
    /// Majority vote over `{0, 1}` outputs instead of averaging.
    pub classification: bool,
}

impl SleepingConfig {
    pub fn new(learning_rate: f64) -> Self {
        SleepingConfig {
            learning_rate,
            seed: 0,
            samples: 64,
            max_rules: 256,
            classification: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid("learning rate must be positive and finite"));
        }
        if self.samples == 0 || self.max_rules == 0 {
            return Err(Error::invalid("samples and max_rules must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SleepingTrace {
    /// Processing order (indices into the training sample).
    pub order: Vec<usize>,
    /// Steps whose rules are kept in the mixture.
    pub rule_steps: Vec<usize>,
    /// Expert weights after the pass, indexed `g * |H| + h`.
    pub final_weights: Vec<f64>,
    /// Mean loss of the aggregate rule on the step it predicted, before
    /// seeing the label.
    pub online_loss: f64,
    pub samples: usize,
    pub classification: bool,
}

/// Uniform mixture over the stored per-step rules.
#[derive(Debug, Clone)]
pub struct SleepingPredictor {
    groups: GroupFamily,
    hypotheses: HypothesisClass,
    // one weight vector per kept rule, indexed g * |H| + h
    rules: Vec<Vec<f64>>,
    // with constant hypotheses: per rule and group, (total weight, weighted
    // mean of the constants)
    summaries: Option<Vec<Vec<(f64, f64)>>>,
    fallback: usize,
    samples: usize,
    classification: bool,
    seed: u64,
}

pub fn sleeping_expert(
    data: &Dataset,
    groups: &GroupFamily,
    hypotheses: &HypothesisClass,
    loss: BoundedLoss,
    config: &SleepingConfig,
) -> Result<(SleepingPredictor, SleepingTrace)> {
    config.validate()?;
    let inst = Instance::new(data, groups, hypotheses, loss);
    let n = inst.n();
    let (gn, hn) = (groups.len(), hypotheses.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let keep = config.max_rules.min(n);
    let rule_steps: Vec<usize> = (0..keep).map(|k| k * n / keep).collect();
    let mut next_rule = 0;

    let awake_groups: Vec<Vec<usize>> = {
        let mut a = alloc::vec![Vec::new(); n];
        for g in 0..gn {
            for &i in inst.members(g) {
                a[i].push(g);
            }
        }
        a
    };

    let mut w = alloc::vec![1.0; gn * hn];
    let mut rules = Vec::with_capacity(keep);
    let mut online = 0.0;
    let mut scratch = Vec::with_capacity(gn * hn);
    for (t, &i) in order.iter().enumerate() {
        if next_rule < rule_steps.len() && rule_steps[next_rule] == t {
            rules.push(w.clone());
            next_rule += 1;
        }
        let x = &data.get(i).x;
        let y = data.get(i).y;
        let awake = &awake_groups[i];
        if awake.is_empty() {
            continue;
        }
        let pred = aggregate(&w, awake, hn, |h| hypotheses.get(h).predict(x));
        online += loss.eval(pred, y);

        scratch.clear();
        let mut before = 0.0;
        let mut after = 0.0;
        for &g in awake {
            for h in 0..hn {
                let e = g * hn + h;
                let l = loss.eval(hypotheses.get(h).predict(x), y);
                let nw = w[e] * math::exp(-config.learning_rate * l);
                before += w[e];
                after += nw;
                scratch.push((e, nw));
            }
        }
        if after > 0.0 {
            let r = before / after;
            for &(e, nw) in &scratch {
                w[e] = nw * r;
            }
        }
    }

    let constants: Option<Vec<f64>> = hypotheses.iter().map(|h| h.constant_value()).collect();
    let summaries = constants.map(|c| {
        rules
            .iter()
            .map(|w| {
                (0..gn)
                    .map(|g| {
                        let mut total = 0.0;
                        let mut mean = 0.0;
                        for (h, &v) in c.iter().enumerate() {
                            let wi = w[g * hn + h];
                            if wi > 0.0 {
                                total += wi;
                                mean += (wi / total) * (v - mean);
                            }
                        }
                        (total, mean)
                    })
                    .collect()
            })
            .collect()
    });
    let predictor = SleepingPredictor {
        groups: groups.clone(),
        hypotheses: hypotheses.clone(),
        rules,
        summaries,
        fallback: inst.erm().0,
        samples: config.samples,
        classification: config.classification,
        seed: config.seed,
    };
    let trace = SleepingTrace {
        order,
        rule_steps,
        final_weights: w,
        online_loss: online / n as f64,
        samples: config.samples,
        classification: config.classification,
    };
    Ok((predictor, trace))
}

/// Weighted mean of the awake experts' predictions, as a running mean so that
/// a single expert (or identical predictions) is reproduced exactly. Falls
/// back to the unweighted mean when every awake weight has underflowed.
fn aggregate(w: &[f64], awake: &[usize], hn: usize, pred: impl Fn(usize) -> f64) -> f64 {
    let preds: Vec<f64> = (0..hn).map(&pred).collect();
    let mut total = 0.0;
    let mut mean = 0.0;
    for &g in awake {
        for (h, &p) in preds.iter().enumerate() {
            let wi = w[g * hn + h];
            if wi > 0.0 {
                total += wi;
                mean += (wi / total) * (p - mean);
            }
        }
    }
    if total > 0.0 {
        return mean;
    }
    let mut k = 0.0;
    for _ in awake {
        for &p in &preds {
            k += 1.0;
            mean += (p - mean) / k;
        }
    }
    mean
}

impl SleepingPredictor {
    pub fn num_rules(&self) -> usize {
        self.rules.len()
    }

    /// Prediction of mixture component `k`.
    pub fn rule_predict(&self, k: usize, x: &[f64]) -> f64 {
        let awake = self.awake(x);
        self.rule_on(k, &awake, x)
    }

    fn awake(&self, x: &[f64]) -> Vec<usize> {
        self.groups
            .iter()
            .filter(|g| g.contains(x))
            .map(|g| g.id)
            .collect()
    }

    fn rule_on(&self, k: usize, awake: &[usize], x: &[f64]) -> f64 {
        if awake.is_empty() {
            return self.hypotheses.get(self.fallback).predict(x);
        }
        if let Some(sum) = &self.summaries {
            let mut total = 0.0;
            let mut mean = 0.0;
            for &g in awake {
                let (wg, mg) = sum[k][g];
                if wg > 0.0 {
                    total += wg;
                    mean += (wg / total) * (mg - mean);
                }
            }
            if total > 0.0 {
                return mean;
            }
        }
        let hn = self.hypotheses.len();
        aggregate(&self.rules[k], awake, hn, |h| self.hypotheses.get(h).predict(x))
    }

    fn seed_for(&self, x: &[f64]) -> u64 {
        let mut s = mix64(self.seed);
        for v in x {
            s = mix64(s ^ v.to_bits());
        }
        s
    }
}

impl Predict for SleepingPredictor {
    fn predict(&self, x: &[f64]) -> f64 {
        let awake = self.awake(x);
        if awake.is_empty() || self.rules.is_empty() {
            return self.hypotheses.get(self.fallback).predict(x);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed_for(x));
        let m = self.rules.len();
        if self.classification {
            let mut ones = 0usize;
            for _ in 0..self.samples {
                let k = rng.random_range(0..m);
                if math::round(self.rule_on(k, &awake, x)) == 1.0 {
                    ones += 1;
                }
            }
            if 2 * ones > self.samples {
                1.0
            } else {
                0.0
            }
        } else {
            let mut mean = 0.0;
            for j in 0..self.samples {
                let k = rng.random_range(0..m);
                mean += (self.rule_on(k, &awake, x) - mean) / (j + 1) as f64;
            }
            mean
        }
    }
}
