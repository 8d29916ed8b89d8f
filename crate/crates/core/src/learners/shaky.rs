use alloc::boxed::Box;
use alloc::vec::Vec;

use super::{group_row, LearnerConfig};
use crate::chain::UpdateChain;
use crate::data::Dataset;
use crate::dp::sparse::{Answer, SparseConfig, SparseState, StoppingRule};
use crate::group::GroupFamily;
use crate::hypothesis::HypothesisClass;
use crate::instance::Instance;
use crate::loss::BoundedLoss;
use crate::math;
use crate::trace::{Iteration, RunTrace};
use crate::{Error, Result};

/// Shaky Prepend: the weighted gap of each `(g, h)` is perturbed by
/// `Lap(2 sigma)` and compared with a `Lap(sigma)`-perturbed threshold; the
/// first crossing in group-major order is prepended. A full sweep without a
/// crossing ends the run.
pub fn shaky_prepend(
    data: &Dataset,
    groups: &GroupFamily,
    hypotheses: &HypothesisClass,
    loss: BoundedLoss,
    config: &LearnerConfig,
) -> Result<(UpdateChain, RunTrace)> {
    run_shaky(&Instance::new(data, groups, hypotheses, loss), config, 1.0)
}

/// Fractional Shaky Prepend: as [`shaky_prepend`] with statistic
/// `P_n(g) (L_n(f|g) - L_n(f'|g))` and updates of size `config.eta`.
pub fn fractional_shaky_prepend(
    data: &Dataset,
    groups: &GroupFamily,
    hypotheses: &HypothesisClass,
    loss: BoundedLoss,
    config: &LearnerConfig,
) -> Result<(UpdateChain, RunTrace)> {
    run_shaky(
        &Instance::new(data, groups, hypotheses, loss),
        config,
        config.eta,
    )
}

pub(crate) fn run_shaky(
    inst: &Instance<'_>,
    config: &LearnerConfig,
    eta: f64,
) -> Result<(UpdateChain, RunTrace)> {
    config.validate()?;
    let sigma = config.noise.resolve(inst.n())?;
    let (h0, alpha) = inst.erm();
    let mut chain = UpdateChain::new(inst.hypotheses.get(h0).clone());
    let mut state = inst.state_from(h0);
    let mut trace = RunTrace {
        alpha,
        empty_groups: inst.empty_groups(),
        ..RunTrace::default()
    };
    let hn = inst.hypotheses.len();
    let m = inst.nonempty_groups().len() * hn;
    let svt = SparseConfig::with_noise_scale(config.lambda, sigma, StoppingRule::QuietQueries(m))?;
    let mut mech = SparseState::new(svt, config.seed)?;
    let cap = config
        .max_iters
        .unwrap_or_else(|| 10 * config.inverse_lambda_cap());
    loop {
        let pre_loss = state.total_loss();
        let mut it = Iteration {
            chosen: None,
            threshold_noise: mech.current_threshold_noise(),
            query_noise: Vec::new(),
            statistic: None,
            examined: 0,
            pre_loss,
            post_loss: pre_loss,
            group_gaps: alloc::vec![None; inst.groups.len()],
        };
        // Statistics are computed one group at a time so that a pass ending
        // early does not pay for the rest of the sweep.
        let mut row = Vec::with_capacity(hn);
        let mut crossing = None;
        'pass: for (gi, &g) in inst.nonempty_groups().iter().enumerate() {
            row.clear();
            it.group_gaps[g] = Some(group_row(inst, &state, g, eta, true, &mut row));
            for (h, &s) in row.iter().enumerate() {
                let answer = mech.step(s)?;
                it.examined += 1;
                it.query_noise
                    .push(mech.transcript().last().expect("answered").query_noise);
                if answer == Answer::Above {
                    crossing = Some((gi * hn + h, s));
                    break 'pass;
                }
            }
        }
        let Some((k, s)) = crossing else {
            // Only the quiet final pass keeps its per-group maxima.
            trace.iterations.push(it);
            trace.completed = true;
            return Ok((chain, trace));
        };
        if trace.num_updates >= cap {
            trace.iterations.push(it);
            return Err(Error::MaxIterations {
                cap,
                theoretical_cap: Some(math::ceil(2.0 * alpha / config.lambda) as usize),
                trace: Box::new(trace),
            });
        }
        it.group_gaps = Vec::new();
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
