use alloc::boxed::Box;
use alloc::vec::Vec;

use super::{sweep, LearnerConfig};
use crate::chain::UpdateChain;
use crate::data::Dataset;
use crate::group::GroupFamily;
use crate::hypothesis::HypothesisClass;
use crate::instance::Instance;
use crate::loss::BoundedLoss;
use crate::math;
use crate::trace::{Iteration, RunTrace};
use crate::{Error, Result};

/// Prepend: argmax of the unweighted gap `L_n(f|g) - L_n(h|g)`, prepend while
/// it is at least `lambda`.
pub fn prepend(
    data: &Dataset,
    groups: &GroupFamily,
    hypotheses: &HypothesisClass,
    loss: BoundedLoss,
    config: &LearnerConfig,
) -> Result<(UpdateChain, RunTrace)> {
    run_argmax(&Instance::new(data, groups, hypotheses, loss), config, 1.0, false)
}

/// Group Prepend: as [`prepend`] with the gap weighted by `P_n(g)`.
pub fn group_prepend(
    data: &Dataset,
    groups: &GroupFamily,
    hypotheses: &HypothesisClass,
    loss: BoundedLoss,
    config: &LearnerConfig,
) -> Result<(UpdateChain, RunTrace)> {
    run_argmax(&Instance::new(data, groups, hypotheses, loss), config, 1.0, true)
}

/// Fractional Prepend: unweighted statistic against the stepped predictor.
pub fn fractional_prepend(
    data: &Dataset,
    groups: &GroupFamily,
    hypotheses: &HypothesisClass,
    loss: BoundedLoss,
    config: &LearnerConfig,
) -> Result<(UpdateChain, RunTrace)> {
    run_argmax(
        &Instance::new(data, groups, hypotheses, loss),
        config,
        config.eta,
        false,
    )
}

/// Fractional Group Prepend: `P_n(g)`-weighted statistic against the stepped
/// predictor.
pub fn fractional_group_prepend(
    data: &Dataset,
    groups: &GroupFamily,
    hypotheses: &HypothesisClass,
    loss: BoundedLoss,
    config: &LearnerConfig,
) -> Result<(UpdateChain, RunTrace)> {
    run_argmax(
        &Instance::new(data, groups, hypotheses, loss),
        config,
        config.eta,
        true,
    )
}

/// Shared loop of the argmax learners. Ties go to the lowest
/// `(group id, hypothesis id)`.
pub(crate) fn run_argmax(
    inst: &Instance<'_>,
    config: &LearnerConfig,
    eta: f64,
    weighted: bool,
) -> Result<(UpdateChain, RunTrace)> {
    config.validate()?;
    let (h0, alpha) = inst.erm();
    let mut chain = UpdateChain::new(inst.hypotheses.get(h0).clone());
    let mut state = inst.state_from(h0);
    let mut trace = RunTrace {
        alpha,
        empty_groups: inst.empty_groups(),
        ..RunTrace::default()
    };
    // Weighted: each update lowers L_n(f) by >= lambda. Unweighted: by >= lambda / n.
    let cap = config.max_iters.unwrap_or_else(|| {
        if weighted {
            config.inverse_lambda_cap()
        } else {
            math::ceil(inst.n() as f64 / config.lambda) as usize
        }
    });
    let hn = inst.hypotheses.len();
    loop {
        let pre_loss = state.total_loss();
        let sw = sweep(inst, &state, eta, weighted);
        let mut best: Option<(usize, f64)> = None;
        for (k, &s) in sw.stats.iter().enumerate() {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((k, s));
            }
        }
        let accepted = best.filter(|&(_, s)| s >= config.lambda);
        let mut it = Iteration {
            chosen: None,
            threshold_noise: 0.0,
            query_noise: Vec::new(),
            statistic: None,
            examined: sw.stats.len(),
            pre_loss,
            post_loss: pre_loss,
            group_gaps: sw.group_gaps,
        };
        let Some((k, s)) = accepted else {
            trace.iterations.push(it);
            trace.completed = true;
            return Ok((chain, trace));
        };
        if trace.num_updates >= cap {
            trace.iterations.push(it);
            return Err(Error::MaxIterations {
                cap,
                theoretical_cap: weighted.then(|| config.inverse_lambda_cap()),
                trace: Box::new(trace),
            });
        }
        let g = inst.nonempty_groups()[k / hn];
        let h = k % hn;
        state.apply(inst, g, h, eta);
        chain.push(eta, inst.groups.get(g).clone(), inst.hypotheses.get(h).clone());
        it.chosen = Some((g, h));
        it.statistic = Some(s);
        it.post_loss = state.total_loss();
        trace.iterations.push(it);
        trace.num_updates += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Indicator;
    use crate::risk::{conditional_loss, empirical_loss};
    use alloc::vec;

    /// Ten points: five in [0, 0.5) with y = 0.2, five in [0.5, 1] with y = 0.8.
    fn two_groups() -> (Dataset, GroupFamily, HypothesisClass) {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| if x < 0.5 { 0.2 } else { 0.8 }).collect();
        let data = Dataset::from_xy(&xs, &ys).unwrap();
        let groups = GroupFamily::new(vec![
            Indicator::interval(0.0, 0.45),
            Indicator::interval(0.5, 1.0),
        ])
        .unwrap();
        let hyps = HypothesisClass::constants(&[0.2, 0.8]).unwrap();
        (data, groups, hyps)
    }

    #[test]
    fn lambda_above_one_means_no_updates() {
        let (d, g, h) = two_groups();
        for f in [prepend, group_prepend] {
            let (chain, trace) = f(&d, &g, &h, BoundedLoss::default(), &LearnerConfig::new(1.5)).unwrap();
            assert!(chain.is_empty());
            assert_eq!(trace.num_updates, 0);
            assert!(trace.completed);
        }
    }

    #[test]
    fn all_ones_group_never_updates() {
        let (d, _, h) = two_groups();
        let g = GroupFamily::new(vec![Indicator::All]).unwrap();
        let (chain, _) = prepend(&d, &g, &h, BoundedLoss::default(), &LearnerConfig::new(1e-9)).unwrap();
        assert!(chain.is_empty());
    }

    #[test]
    fn two_groups_fit_exactly() {
        let (d, g, h) = two_groups();
        let loss = BoundedLoss::default();
        // Loop simulation: ERM ties between 0.2 and 0.8 (loss 0.18 each) and
        // picks 0.2. The only positive gap is (g1, 0.8) with gap 0.36, after
        // which every gap is zero: exactly one update.
        let (chain, trace) = prepend(&d, &g, &h, loss, &LearnerConfig::new(0.01)).unwrap();
        assert_eq!(chain.signature(), vec![(1, 1, 1.0)]);
        assert!((trace.iterations[0].statistic.unwrap() - 0.36).abs() < 1e-12);
        for grp in g.iter() {
            assert!(conditional_loss(&d, &chain, &loss, grp).unwrap() < 0.01);
        }
        let (gchain, _) = group_prepend(&d, &g, &h, loss, &LearnerConfig::new(0.01)).unwrap();
        assert_eq!(gchain.signature(), chain.signature());
    }

    #[test]
    fn group_prepend_decreases_loss_by_lambda() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 / 40.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| libm::sin(7.0 * x) * 0.5 + 0.5).collect();
        let d = Dataset::from_xy(&xs, &ys).unwrap();
        let g = GroupFamily::new(
            (0..8)
                .map(|k| Indicator::interval(k as f64 / 8.0, (k + 2) as f64 / 8.0))
                .collect(),
        )
        .unwrap();
        let h = HypothesisClass::constant_grid(0.0, 1.0, 0.1).unwrap();
        let cfg = LearnerConfig::new(0.005);
        let (chain, trace) = group_prepend(&d, &g, &h, BoundedLoss::default(), &cfg).unwrap();
        assert!(trace.num_updates > 0);
        assert!(trace.num_updates <= cfg.inverse_lambda_cap());
        for it in trace.accepted() {
            assert!(it.post_loss <= it.pre_loss - cfg.lambda + 1e-12);
        }
        assert!((trace.final_loss() - empirical_loss(&d, &chain, &BoundedLoss::default())).abs() < 1e-12);
    }

    #[test]
    fn cap_exceeded_returns_partial_trace() {
        let (d, g, h) = two_groups();
        let err = prepend(
            &d,
            &g,
            &h,
            BoundedLoss::default(),
            &LearnerConfig::new(0.01).with_max_iters(0),
        )
        .unwrap_err();
        match err {
            Error::MaxIterations { cap, trace, .. } => {
                assert_eq!(cap, 0);
                assert!(!trace.completed);
            }
            e => panic!("{e:?}"),
        }
    }
}
