use alloc::vec::Vec;

/// One pass of a learner over `G x H`, ending either with an accepted update
/// or with termination.
#[derive(Debug, Clone, PartialEq)]
pub struct Iteration {
    /// `(group id, hypothesis id)` of the accepted update, if any.
    pub chosen: Option<(usize, usize)>,
    /// Threshold noise `xi_t` in force during this pass (zero for
    /// deterministic learners).
    pub threshold_noise: f64,
    /// Query noise `mu_{t,g,h}` for every examined pair, in enumeration
    /// order. Empty for deterministic learners.
    pub query_noise: Vec<f64>,
    /// Acceptance statistic of the chosen pair (without noise).
    pub statistic: Option<f64>,
    /// Number of `(g, h)` pairs examined.
    pub examined: usize,
    /// `L_n(f_t)` before and after the pass.
    pub pre_loss: f64,
    pub post_loss: f64,
    /// Per group, the largest acceptance statistic over hypotheses at the
    /// start of the pass. `None` for groups with no members. Shaky Prepend
    /// fills this only on its final pass and leaves it empty otherwise.
    pub group_gaps: Vec<Option<f64>>,
}

impl Iteration {
    /// Query noise of the accepted pair (`xi'_t`).
    pub fn chosen_noise(&self) -> Option<f64> {
        self.chosen.and_then(|_| self.query_noise.last().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub iterations: Vec<Iteration>,
    /// `min_h L_n(h)`, the empirical loss of the base hypothesis.
    pub alpha: f64,
    /// Number of accepted updates `B`.
    pub num_updates: usize,
    /// Groups skipped because they have no members in the sample.
    pub empty_groups: Vec<usize>,
    /// False when the learner stopped at its update cap.
    pub completed: bool,
}

impl RunTrace {
    pub fn final_pass(&self) -> Option<&Iteration> {
        self.iterations.last()
    }

    /// Empirical loss of the returned predictor.
    pub fn final_loss(&self) -> f64 {
        self.iterations.last().map_or(self.alpha, |it| it.post_loss)
    }

    pub fn accepted(&self) -> impl Iterator<Item = &Iteration> {
        self.iterations.iter().filter(|it| it.chosen.is_some())
    }

    /// Every realized noise value: threshold noises and all query noises.
    pub fn all_noises(&self) -> impl Iterator<Item = f64> + '_ {
        self.iterations.iter().flat_map(|it| {
            core::iter::once(it.threshold_noise).chain(it.query_noise.iter().copied())
        })
    }

    /// Sparse-vector answers in query order (`true` for a crossing),
    /// rebuilt from the per-pass counts.
    pub fn transcript(&self) -> Vec<bool> {
        let mut out = Vec::new();
        for it in &self.iterations {
            let below = if it.chosen.is_some() { it.examined.saturating_sub(1) } else { it.examined };
            out.extend(core::iter::repeat_n(false, below));
            if it.chosen.is_some() {
                out.push(true);
            }
        }
        out
    }
}
