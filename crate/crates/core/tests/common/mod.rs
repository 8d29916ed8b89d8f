#![allow(dead_code)]

use multigroup_core::{BoundedLoss, Dataset, GroupFamily, HypothesisClass, Indicator, UpdateChain};
use multigroup_core::risk::conditional_loss;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Small {
    pub data: Dataset,
    pub groups: GroupFamily,
    pub hyps: HypothesisClass,
}

/// Random interval groups and constant hypotheses on `[0, 1]`; some groups
/// may be empty.
pub fn random_instance(seed: u64) -> Small {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(5..=50);
    let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| (0.5 + 0.4 * (6.0 * x).sin() + 0.2 * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0))
        .collect();
    let gn = rng.random_range(1..=8);
    let groups = (0..gn)
        .map(|_| {
            let a = rng.random::<f64>();
            let b = rng.random::<f64>();
            Indicator::interval(a.min(b), a.max(b))
        })
        .collect();
    let hn = rng.random_range(1..=8);
    let consts: Vec<f64> = (0..hn).map(|_| rng.random::<f64>()).collect();
    Small {
        data: Dataset::from_xy(&xs, &ys).unwrap(),
        groups: GroupFamily::new(groups).unwrap(),
        hyps: HypothesisClass::constants(&consts).unwrap(),
    }
}

/// The acceptance statistic of `(g, h)` recomputed from the chain alone:
/// the gap between `f` and `f + eta g (h - f)` on `g`, optionally weighted by
/// the group mass. `None` when `g` has no members.
pub fn statistic(
    s: &Small,
    chain: &UpdateChain,
    g: usize,
    h: usize,
    eta: f64,
    weighted: bool,
    loss: &BoundedLoss,
) -> Option<f64> {
    let group = s.groups.get(g);
    let lf = conditional_loss(&s.data, chain, loss, group).ok()?;
    let mut stepped = chain.clone();
    stepped.push(eta, group.clone(), s.hyps.get(h).clone());
    let lh = conditional_loss(&s.data, &stepped, loss, group).ok()?;
    let count = s.data.iter().filter(|r| group.contains(&r.x)).count();
    let gap = lf - lh;
    Some(if weighted { count as f64 / s.data.len() as f64 * gap } else { gap })
}

/// Random evaluation grid covering and slightly exceeding `[0, 1]`.
pub fn grid(seed: u64, k: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k).map(|_| rng.random_range(-0.1..1.1)).collect()
}
