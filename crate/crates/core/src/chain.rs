//! The learned predictor.
//!
//! An [`UpdateChain`] starts from a base hypothesis and applies its updates in
//! chronological order:
//!
//! ```text
//! f_0(x)     = base(x)
//! f_{t+1}(x) = f_t(x) + eta_t * g_t(x) * (h_t(x) - f_t(x))
//! ```
//!
//! With every `eta_t = 1` this is the decision list `[g_T, h_T, ..., g_1, h_1, 1, h_0]`
//! in which the most recent pair covering `x` decides the prediction.

use alloc::vec::Vec;

use crate::group::Group;
use crate::hypothesis::Hypothesis;
use crate::risk::Predict;

#[derive(Debug, Clone)]
pub struct Update {
    pub eta: f64,
    pub group: Group,
    pub hypothesis: Hypothesis,
}

#[derive(Debug, Clone)]
pub struct UpdateChain {
    pub base: Hypothesis,
    pub updates: Vec<Update>,
}

/// One update step at a covered point. A full step returns `h` exactly.
#[inline]
pub fn blend(f: f64, h: f64, eta: f64) -> f64 {
    if eta == 1.0 {
        h
    } else {
        f + eta * (h - f)
    }
}

impl UpdateChain {
    pub fn new(base: Hypothesis) -> Self {
        UpdateChain {
            base,
            updates: Vec::new(),
        }
    }

    pub fn push(&mut self, eta: f64, group: Group, hypothesis: Hypothesis) {
        self.updates.push(Update {
            eta,
            group,
            hypothesis,
        });
    }

    /// Number of updates `B`.
    pub fn len(&self) -> usize {
        self.updates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.updates.is_empty()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.updates.iter().fold(self.base.predict(x), |f, u| {
            if u.group.contains(x) {
                blend(f, u.hypothesis.predict(x), u.eta)
            } else {
                f
            }
        })
    }

    /// `(group id, hypothesis id, eta)` per update, in chronological order.
    pub fn signature(&self) -> Vec<(usize, usize, f64)> {
        self.updates
            .iter()
            .map(|u| (u.group.id, u.hypothesis.id, u.eta))
            .collect()
    }
}

impl Predict for UpdateChain {
    fn predict(&self, x: &[f64]) -> f64 {
        self.evaluate(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Indicator;
    use crate::hypothesis::HypothesisKind;

    fn hyp(id: usize, c: f64) -> Hypothesis {
        Hypothesis {
            id,
            kind: HypothesisKind::Constant(c),
        }
    }

    #[test]
    fn empty_chain_is_base() {
        let chain = UpdateChain::new(hyp(0, 0.3));
        assert_eq!(chain.evaluate(&[0.7]), 0.3);
    }

    #[test]
    fn full_update_replaces_on_covered_points() {
        let mut chain = UpdateChain::new(hyp(0, 0.3));
        let g = Group {
            id: 1,
            indicator: Indicator::interval(0.0, 0.5),
        };
        chain.push(1.0, g, hyp(1, 0.9));
        assert_eq!(chain.evaluate(&[0.2]), 0.9);
        assert_eq!(chain.evaluate(&[0.8]), 0.3);
    }

    #[test]
    fn half_step() {
        let mut chain = UpdateChain::new(hyp(0, 0.0));
        chain.push(0.5, Group::all(0), hyp(1, 1.0));
        assert_eq!(chain.evaluate(&[0.1]), 0.5);
        assert_eq!(chain.evaluate(&[0.9]), 0.5);
    }
}
