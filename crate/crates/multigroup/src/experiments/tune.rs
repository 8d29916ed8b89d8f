use std::fmt;
use std::str::FromStr;

use multigroup_core::learners::{
    sleeping_expert, LearnerConfig, Method, SleepingConfig, SleepingPredictor,
};
use multigroup_core::{
    BoundedLoss, Dataset, Error as CoreError, GroupFamily, HypothesisClass, Instance, Predict,
    RunTrace, UpdateChain,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Criterion {
    TotalLoss,
    WorstGroupLoss,
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::TotalLoss => "total_loss",
            Criterion::WorstGroupLoss => "worst_group_loss",
        }
    }

    pub fn score(&self, e: &Evaluation) -> f64 {
        match self {
            Criterion::TotalLoss => e.total_loss,
            Criterion::WorstGroupLoss => e.worst_group_loss,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "total_loss" | "total" => Ok(Criterion::TotalLoss),
            "worst_group_loss" | "worst_group" | "worst" => Ok(Criterion::WorstGroupLoss),
            _ => Err(Error::usage(format!("unknown criterion `{s}`"))),
        }
    }
}

/// One hyperparameter setting. Fields a method does not use are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper {
    pub lambda: f64,
    pub sigma: f64,
    pub eta: f64,
    pub learning_rate: f64,
}

/// Candidate lists per hyperparameter. A method's grid is the product of the
/// lists it uses, in `lambda, sigma, eta` order (`learning_rate` alone for
/// sleeping experts).
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    pub lambda: Vec<f64>,
    pub sigma: Vec<f64>,
    pub eta: Vec<f64>,
    pub learning_rate: Vec<f64>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        HyperGrid {
            lambda: vec![0.0005, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05],
            sigma: vec![0.0005, 0.002],
            eta: vec![0.5, 1.0],
            learning_rate: vec![0.5, 2.0, 8.0],
        }
    }
}

impl HyperGrid {
    pub fn points(&self, method: Method) -> Vec<Hyper> {
        let base = Hyper {
            lambda: f64::NAN,
            sigma: 0.0,
            eta: 1.0,
            learning_rate: f64::NAN,
        };
        if method == Method::SleepingExpert {
            return self
                .learning_rate
                .iter()
                .map(|&learning_rate| Hyper {
                    learning_rate,
                    ..base
                })
                .collect();
        }
        let sigmas: &[f64] = if method.is_noisy() { &self.sigma } else { &[0.0] };
        let etas: &[f64] = if method.is_fractional() { &self.eta } else { &[1.0] };
        let mut out = Vec::new();
        for &lambda in &self.lambda {
            for &sigma in sigmas {
                for &eta in etas {
                    out.push(Hyper {
                        lambda,
                        sigma,
                        eta,
                        ..base
                    });
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let lists = [
            ("lambda", &self.lambda),
            ("sigma", &self.sigma),
            ("eta", &self.eta),
            ("learning_rate", &self.learning_rate),
        ];
        for (name, l) in lists {
            if l.is_empty() {
                return Err(Error::usage(format!("{name} grid is empty")));
            }
        }
        Ok(())
    }
}

/// A fitted predictor.
#[derive(Debug, Clone)]
pub enum Model {
    Chain(UpdateChain),
    Sleeping(SleepingPredictor),
}

impl Predict for Model {
    fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Model::Chain(c) => c.predict(x),
            Model::Sleeping(s) => s.predict(x),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fitted {
    pub model: Model,
    pub hyper: Hyper,
    pub num_updates: usize,
    pub trace: Option<RunTrace>,
}

/// Fits `method` with one hyperparameter setting. `inst` must be built from
/// the training data; sleeping experts rebuild their own state from it.
pub fn fit(method: Method, inst: &Instance<'_>, hyper: Hyper, seed: u64) -> Result<Fitted> {
    if method == Method::SleepingExpert {
        let cfg = SleepingConfig::new(hyper.learning_rate).with_seed(seed);
        let (p, t) = sleeping_expert(inst.data, inst.groups, inst.hypotheses, inst.loss, &cfg)?;
        return Ok(Fitted {
            model: Model::Sleeping(p),
            hyper,
            num_updates: t.order.len(),
            trace: None,
        });
    }
    let cfg = LearnerConfig::new(hyper.lambda)
        .with_sigma(hyper.sigma)
        .with_eta(hyper.eta)
        .with_seed(seed);
    let (chain, trace) = method.fit_instance(inst, &cfg)?;
    Ok(Fitted {
        model: Model::Chain(chain),
        hyper,
        num_updates: trace.num_updates,
        trace: Some(trace),
    })
}

/// Losses of a predictor on a labelled set.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub total_loss: f64,
    /// Maximum over groups with at least one member.
    pub worst_group_loss: f64,
    pub worst_group_id: Option<usize>,
    /// `L(f|g)` per group; `None` where the group has no members.
    pub group_losses: Vec<Option<f64>>,
    /// `max_g (L(f|g) - min_h L(h|g))` over groups with members.
    pub worst_group_excess: f64,
}

impl Evaluation {
    pub fn undefined_groups(&self) -> Vec<usize> {
        (0..self.group_losses.len())
            .filter(|&g| self.group_losses[g].is_none())
            .collect()
    }
}

/// Evaluates `model` on every record of `inst`. Records are summed in index
/// order.
pub fn evaluate<P: Predict + ?Sized>(model: &P, inst: &Instance<'_>) -> Evaluation {
    let losses: Vec<f64> = inst
        .data
        .iter()
        .map(|r| inst.loss.eval(model.predict(&r.x), r.y))
        .collect();
    let total_loss = losses.iter().sum::<f64>() / losses.len() as f64;
    let mut group_losses = vec![None; inst.groups.len()];
    let mut worst = (f64::NEG_INFINITY, None);
    let mut excess = f64::NEG_INFINITY;
    for &g in inst.nonempty_groups() {
        let m = inst.members(g);
        let l = m.iter().map(|&i| losses[i]).sum::<f64>() / m.len() as f64;
        group_losses[g] = Some(l);
        if l > worst.0 {
            worst = (l, Some(g));
        }
        excess = excess.max(l - inst.best_group_loss(g).expect("non-empty"));
    }
    Evaluation {
        total_loss,
        worst_group_loss: worst.0,
        worst_group_id: worst.1,
        group_losses,
        worst_group_excess: excess,
    }
}

#[derive(Debug, Clone)]
pub struct TuneRow {
    pub hyper: Hyper,
    /// `+inf` when the fit stopped at its update cap.
    pub score: f64,
    /// `None` when the fit stopped at its update cap.
    pub validation: Option<Evaluation>,
    pub num_updates: usize,
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub best_index: usize,
    pub fitted: Fitted,
    pub table: Vec<TuneRow>,
}

impl TuneOutcome {
    pub fn best(&self) -> Hyper {
        self.table[self.best_index].hyper
    }
}

/// Fits `method` at every grid point on `train` and keeps the one with the
/// lowest `criterion` on `val`; ties go to the earliest grid point. A point
/// whose fit stops at the update cap is recorded but never selected; if every
/// point does, the last cap error is returned.
#[allow(clippy::too_many_arguments)]
pub fn tune(
    train: &Dataset,
    val: &Dataset,
    groups: &GroupFamily,
    hypotheses: &HypothesisClass,
    method: Method,
    grid: &[Hyper],
    criterion: Criterion,
    loss: BoundedLoss,
    seed: u64,
) -> Result<TuneOutcome> {
    if grid.is_empty() {
        return Err(Error::usage("empty hyperparameter grid"));
    }
    let train_inst = Instance::new(train, groups, hypotheses, loss);
    let val_inst = Instance::new(val, groups, hypotheses, loss);
    if criterion == Criterion::WorstGroupLoss && val_inst.nonempty_groups().is_empty() {
        return Err(Error::NoValidationGroups);
    }
    let mut table = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64, Fitted)> = None;
    let mut capped = None;
    for (k, &hyper) in grid.iter().enumerate() {
        let fitted = match fit(method, &train_inst, hyper, seed) {
            Ok(f) => f,
            Err(Error::Core(e)) => {
                let CoreError::MaxIterations { trace, .. } = &e else {
                    return Err(e.into());
                };
                table.push(TuneRow {
                    hyper,
                    score: f64::INFINITY,
                    validation: None,
                    num_updates: trace.num_updates,
                });
                capped = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let validation = evaluate(&fitted.model, &val_inst);
        let score = criterion.score(&validation);
        let better = best.as_ref().is_none_or(|b| score < b.1);
        table.push(TuneRow {
            hyper,
            score,
            validation: Some(validation),
            num_updates: fitted.num_updates,
        });
        if better {
            best = Some((k, score, fitted));
        }
    }
    let Some((best_index, _, fitted)) = best else {
        return Err(capped.expect("non-empty grid").into());
    };
    Ok(TuneOutcome {
        best_index,
        fitted,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::data::gen_unbalanced;

    fn setup() -> (Dataset, Dataset, GroupFamily, HypothesisClass) {
        let (train, g) = gen_unbalanced(120, 1).unwrap();
        let (val, _) = gen_unbalanced(120, 2).unwrap();
        (train, val, g, HypothesisClass::constant_grid(0.0, 1.0, 0.1).unwrap())
    }

    #[test]
    fn grid_shapes() {
        let g = HyperGrid::default();
        assert_eq!(g.points(Method::Prepend).len(), g.lambda.len());
        assert_eq!(g.points(Method::Shaky).len(), g.lambda.len() * g.sigma.len());
        assert_eq!(
            g.points(Method::FractionalShaky).len(),
            g.lambda.len() * g.sigma.len() * g.eta.len()
        );
        assert_eq!(g.points(Method::SleepingExpert).len(), g.learning_rate.len());
        assert!(g.points(Method::GroupPrepend).iter().all(|h| h.eta == 1.0 && h.sigma == 0.0));
    }

    #[test]
    fn single_point_is_returned() {
        let (train, val, g, h) = setup();
        let grid = HyperGrid {
            lambda: vec![0.3],
            ..HyperGrid::default()
        }
        .points(Method::GroupPrepend);
        let out = tune(&train, &val, &g, &h, Method::GroupPrepend, &grid, Criterion::WorstGroupLoss, BoundedLoss::default(), 0).unwrap();
        assert_eq!(out.best_index, 0);
        assert_eq!(out.best().lambda, 0.3);
    }

    #[test]
    fn total_loss_picks_the_lower_of_two() {
        let (train, val, g, h) = setup();
        let loss = BoundedLoss::default();
        let grid = HyperGrid {
            lambda: vec![0.9, 0.002],
            ..HyperGrid::default()
        }
        .points(Method::GroupPrepend);
        let out = tune(&train, &val, &g, &h, Method::GroupPrepend, &grid, Criterion::TotalLoss, loss, 0).unwrap();
        // Direct comparison of the two fits.
        let ti = Instance::new(&train, &g, &h, loss);
        let vi = Instance::new(&val, &g, &h, loss);
        let scores: Vec<f64> = grid
            .iter()
            .map(|&hp| evaluate(&fit(Method::GroupPrepend, &ti, hp, 0).unwrap().model, &vi).total_loss)
            .collect();
        assert!(scores[1] < scores[0]);
        assert_eq!(out.best().lambda, 0.002);
        let again = tune(&train, &val, &g, &h, Method::GroupPrepend, &grid, Criterion::TotalLoss, loss, 0).unwrap();
        assert_eq!(again.best_index, out.best_index);
    }

    #[test]
    fn selection_ignores_validation_order() {
        let (train, val, g, h) = setup();
        let mut recs = val.records().to_vec();
        recs.reverse();
        let shuffled = Dataset::new(recs).unwrap();
        let grid = HyperGrid::default().points(Method::Prepend);
        for c in [Criterion::TotalLoss, Criterion::WorstGroupLoss] {
            let a = tune(&train, &val, &g, &h, Method::Prepend, &grid, c, BoundedLoss::default(), 0).unwrap();
            let b = tune(&train, &shuffled, &g, &h, Method::Prepend, &grid, c, BoundedLoss::default(), 0).unwrap();
            assert_eq!(a.best_index, b.best_index);
        }
    }

    #[test]
    fn worst_group_needs_a_populated_group() {
        let (train, _, _, h) = setup();
        let val = Dataset::from_xy(&[5.0], &[0.0]).unwrap();
        let g = GroupFamily::new(vec![multigroup_core::Indicator::interval(0.0, 1.0)]).unwrap();
        let grid = HyperGrid::default().points(Method::Prepend);
        let r = tune(&train, &val, &g, &h, Method::Prepend, &grid, Criterion::WorstGroupLoss, BoundedLoss::default(), 0);
        assert!(matches!(r, Err(Error::NoValidationGroups)));
    }
}
