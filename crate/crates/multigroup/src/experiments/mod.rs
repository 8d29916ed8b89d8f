//! Simulation studies: scenario presets, tuning on a validation split and
//! evaluation on a fixed test set.
//!
//! Each run `r` draws its own train and validation sets from seeds derived
//! from `(seed, r)`. The test set is drawn once per scenario from a separate
//! derived seed. Every (run, method, criterion) cell is independent and cells
//! execute in parallel; rows are sorted before aggregation, so results do not
//! depend on scheduling.

pub mod data;
pub mod tune;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use multigroup_core::dp::audit::derive_seed;
use multigroup_core::learners::Method;
use multigroup_core::theory::recipe_shaky;
use multigroup_core::{BoundedLoss, Dataset, GroupFamily, HypothesisClass, Instance};
use rayon::prelude::*;

use crate::error::{Error, Result};
pub use data::{
    gen_criterion, gen_spatial, gen_unbalanced, interval_grid_groups, Design, PiecewiseConstant,
};
pub use tune::{evaluate, fit, tune, Criterion, Evaluation, Fitted, Hyper, HyperGrid, Model};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    CriterionSelection,
    Unbalanced,
    Spatial,
    FractionalAblation,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::CriterionSelection,
        Scenario::Unbalanced,
        Scenario::Spatial,
        Scenario::FractionalAblation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::CriterionSelection => "criterion_selection",
            Scenario::Unbalanced => "unbalanced",
            Scenario::Spatial => "spatial",
            Scenario::FractionalAblation => "fractional_ablation",
        }
    }

    pub fn design(&self) -> Design {
        match self {
            Scenario::CriterionSelection => data::criterion_design(),
            Scenario::Unbalanced => data::unbalanced_design(),
            Scenario::Spatial | Scenario::FractionalAblation => data::spatial_design(),
        }
    }

    pub fn groups(&self) -> GroupFamily {
        match self {
            Scenario::CriterionSelection => data::criterion_groups(),
            Scenario::Unbalanced => data::unbalanced_groups(),
            Scenario::Spatial | Scenario::FractionalAblation => {
                interval_grid_groups(0.05, 0.05).expect("valid steps")
            }
        }
    }

    /// Range of the constant hypothesis grid.
    pub fn label_range(&self) -> (f64, f64) {
        match self {
            Scenario::CriterionSelection => (0.0, 5.0),
            _ => (0.0, 1.0),
        }
    }

    pub fn loss(&self) -> BoundedLoss {
        match self {
            Scenario::CriterionSelection => BoundedLoss::ClampedSquared { scale: 3.0 },
            _ => BoundedLoss::ClampedSquared { scale: 1.0 },
        }
    }

    /// Test labels are noiseless for the spatial designs.
    pub fn noiseless_test(&self) -> bool {
        matches!(self, Scenario::Spatial | Scenario::FractionalAblation)
    }

    /// Preset configuration.
    pub fn preset(&self) -> ScenarioConfig {
        let all4 = vec![
            Method::Prepend,
            Method::GroupPrepend,
            Method::Shaky,
            Method::SleepingExpert,
        ];
        let base = ScenarioConfig {
            scenario: *self,
            n_train: 200,
            n_val: 200,
            n_test: 2000,
            noise_sd: data::SPATIAL_NOISE,
            seed: 1,
            methods: all4.clone(),
            grid: HyperGrid::default(),
            criteria: vec![Criterion::TotalLoss],
            runs: 20,
            hyp_step: 0.1,
            recipe_beta: None,
            timing: true,
        };
        match self {
            Scenario::CriterionSelection => ScenarioConfig {
                n_train: data::CRITERION_LARGE_N,
                n_val: data::CRITERION_LARGE_N / 2,
                n_test: 20_000,
                noise_sd: data::CRITERION_NOISE,
                criteria: vec![Criterion::TotalLoss, Criterion::WorstGroupLoss],
                grid: HyperGrid {
                    lambda: vec![0.00005, 0.0001, 0.0002, 0.0005, 0.001, 0.002, 0.005, 0.01],
                    sigma: vec![0.00002, 0.0001],
                    ..HyperGrid::default()
                },
                ..base
            },
            Scenario::Unbalanced => ScenarioConfig {
                n_train: 120,
                n_val: 120,
                n_test: 4000,
                noise_sd: data::UNBALANCED_NOISE,
                ..base
            },
            Scenario::Spatial => base,
            Scenario::FractionalAblation => ScenarioConfig {
                methods: vec![
                    Method::Prepend,
                    Method::FractionalPrepend,
                    Method::GroupPrepend,
                    Method::FractionalGroupPrepend,
                    Method::Shaky,
                    Method::FractionalShaky,
                ],
                ..base
            },
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.replace('-', "_");
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s || (s == "criterion" && *sc == Scenario::CriterionSelection))
            .ok_or_else(|| Error::usage(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub noise_sd: f64,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub grid: HyperGrid,
    pub criteria: Vec<Criterion>,
    pub runs: usize,
    /// Spacing of the constant hypothesis grid.
    pub hyp_step: f64,
    /// When set, `lambda` and `sigma` of every chain method come from the
    /// Shaky Prepend recipe at this confidence level instead of tuning.
    pub recipe_beta: Option<f64>,
    /// Record wall-clock times; when false `wall_ms` is written as 0 so that
    /// outputs are bit-reproducible.
    pub timing: bool,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.n_val == 0 || self.n_test == 0 || self.runs == 0 {
            return Err(Error::usage("sample sizes and run count must be at least 1"));
        }
        if self.methods.is_empty() || self.criteria.is_empty() {
            return Err(Error::usage("need at least one method and one criterion"));
        }
        if !(self.noise_sd >= 0.0) || !(self.hyp_step > 0.0) {
            return Err(Error::usage("noise must be >= 0 and the hypothesis step > 0"));
        }
        if let Some(b) = self.recipe_beta {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::usage("recipe beta must lie in (0, 1)"));
            }
        }
        self.grid.validate()
    }

    pub fn hypotheses(&self) -> Result<HypothesisClass> {
        let (lo, hi) = self.scenario.label_range();
        Ok(HypothesisClass::constant_grid(lo, hi, self.hyp_step)?)
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        derive_seed(self.seed, run as u64)
    }

    pub fn test_seed(&self) -> u64 {
        derive_seed(self.seed, u64::MAX)
    }
}

/// One (run, method, criterion) cell. The first fields are the results CSV
/// columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub run_id: usize,
    pub method: Method,
    pub seed: u64,
    pub n: usize,
    /// `None` where the method has no such parameter.
    pub lambda: Option<f64>,
    pub sigma: Option<f64>,
    pub eta: Option<f64>,
    pub criterion: Criterion,
    pub total_loss: f64,
    pub worst_group_loss: f64,
    pub worst_group_id: Option<usize>,
    pub num_updates: usize,
    pub wall_ms: f64,
    pub learning_rate: Option<f64>,
    pub worst_group_excess: f64,
    /// Groups with no test members.
    pub undefined_groups: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    /// Mean and standard error (sample standard deviation over `sqrt(k)`;
    /// zero for a single value).
    pub fn of(values: &[f64]) -> MeanSe {
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        if values.len() < 2 {
            return MeanSe { mean, se: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
        MeanSe {
            mean,
            se: (var / k).sqrt(),
        }
    }
}

/// Standard error of a difference of two independent means.
pub fn pooled_se(a: MeanSe, b: MeanSe) -> f64 {
    (a.se * a.se + b.se * b.se).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub method: Method,
    pub criterion: Criterion,
    pub runs: usize,
    pub total_loss: MeanSe,
    pub worst_group_loss: MeanSe,
    pub worst_group_excess: MeanSe,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ScenarioConfig,
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<Aggregate>,
}

impl ExperimentResult {
    pub fn aggregate(&self, method: Method, criterion: Criterion) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.method == method && a.criterion == criterion)
    }
}

/// Mean and standard error per (method, criterion), in the order methods and
/// criteria appear in the configuration.
pub fn aggregate_rows(config: &ScenarioConfig, rows: &[ResultRow]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for &criterion in &config.criteria {
        for &method in &config.methods {
            let sel: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.method == method && r.criterion == criterion)
                .collect();
            if sel.is_empty() {
                continue;
            }
            let col = |f: fn(&ResultRow) -> f64| MeanSe::of(&sel.iter().map(|r| f(r)).collect::<Vec<_>>());
            out.push(Aggregate {
                method,
                criterion,
                runs: sel.len(),
                total_loss: col(|r| r.total_loss),
                worst_group_loss: col(|r| r.worst_group_loss),
                worst_group_excess: col(|r| r.worst_group_excess),
            });
        }
    }
    out
}

/// Draws the run's train and validation sets.
pub fn run_data(config: &ScenarioConfig, run: usize) -> Result<(Dataset, Dataset)> {
    let design = config.scenario.design();
    let s = config.run_seed(run);
    Ok((
        design.sample(config.n_train, config.noise_sd, derive_seed(s, 1))?,
        design.sample(config.n_val, config.noise_sd, derive_seed(s, 2))?,
    ))
}

/// The scenario's fixed test set.
pub fn test_data(config: &ScenarioConfig) -> Result<Dataset> {
    let noise = if config.scenario.noiseless_test() { 0.0 } else { config.noise_sd };
    config
        .scenario
        .design()
        .sample(config.n_test, noise, config.test_seed())
}

fn method_index(m: Method) -> u64 {
    Method::ALL.iter().position(|&x| x == m).expect("listed") as u64
}

/// Seed for the learner's own randomness in a cell.
pub fn learner_seed(config: &ScenarioConfig, run: usize, method: Method) -> u64 {
    derive_seed(config.run_seed(run), 16 + method_index(method))
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let groups = config.scenario.groups();
    let hyps = config.hypotheses()?;
    let loss = config.scenario.loss();
    let test = test_data(config)?;
    let test_inst = Instance::new(&test, &groups, &hyps, loss);

    let splits: Vec<(Dataset, Dataset)> = (0..config.runs)
        .into_par_iter()
        .map(|r| run_data(config, r))
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for run in 0..config.runs {
        for &method in &config.methods {
            for &criterion in &config.criteria {
                cells.push((run, method, criterion));
            }
        }
    }
    let mut rows: Vec<ResultRow> = cells
        .into_par_iter()
        .map(|(run, method, criterion)| {
            let (train, val) = &splits[run];
            run_cell(config, run, method, criterion, train, val, &groups, &hyps, &test_inst)
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| {
        (
            r.run_id,
            config.methods.iter().position(|&m| m == r.method),
            config.criteria.iter().position(|&c| c == r.criterion),
        )
    });
    let aggregates = aggregate_rows(config, &rows);
    Ok(ExperimentResult {
        config: config.clone(),
        rows,
        aggregates,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    config: &ScenarioConfig,
    run: usize,
    method: Method,
    criterion: Criterion,
    train: &Dataset,
    val: &Dataset,
    groups: &GroupFamily,
    hyps: &HypothesisClass,
    test_inst: &Instance<'_>,
) -> Result<ResultRow> {
    let start = Instant::now();
    let seed = learner_seed(config, run, method);
    let loss = config.scenario.loss();
    let wrap = |e: Error| match e {
        Error::Core(source) => Error::Learner { method, run, source },
        other => other,
    };
    let fitted = match config.recipe_beta {
        Some(beta) if method != Method::SleepingExpert => {
            let p = recipe_shaky(config.n_train, groups.len(), hyps.len(), beta, false)
                .map_err(Error::from)
                .map_err(wrap)?;
            let grid = config.grid.points(method);
            let hyper = Hyper {
                lambda: p.lambda,
                sigma: if method.is_noisy() { p.sigma } else { 0.0 },
                eta: if method.is_fractional() { grid[0].eta } else { 1.0 },
                learning_rate: f64::NAN,
            };
            let inst = Instance::new(train, groups, hyps, loss);
            fit(method, &inst, hyper, seed).map_err(wrap)?
        }
        _ => {
            let grid = config.grid.points(method);
            tune(train, val, groups, hyps, method, &grid, criterion, loss, seed)
                .map_err(wrap)?
                .fitted
        }
    };
    let eval = evaluate(&fitted.model, test_inst);
    let chain = method != Method::SleepingExpert;
    let wall_ms = if config.timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    Ok(ResultRow {
        run_id: run,
        method,
        seed,
        n: config.n_train,
        lambda: chain.then_some(fitted.hyper.lambda),
        sigma: chain.then_some(fitted.hyper.sigma),
        eta: chain.then_some(fitted.hyper.eta),
        criterion,
        total_loss: eval.total_loss,
        worst_group_loss: eval.worst_group_loss,
        worst_group_id: eval.worst_group_id,
        num_updates: fitted.num_updates,
        wall_ms,
        learning_rate: (!chain).then_some(fitted.hyper.learning_rate),
        worst_group_excess: eval.worst_group_excess,
        undefined_groups: eval.undefined_groups(),
    })
}

/// Rebuilds the model behind `row` from its run's training data and the
/// selected hyperparameters. Fits are deterministic, so this is the model
/// that was evaluated.
pub fn refit(config: &ScenarioConfig, row: &ResultRow) -> Result<Fitted> {
    let (train, _) = run_data(config, row.run_id)?;
    let groups = config.scenario.groups();
    let hyps = config.hypotheses()?;
    let inst = Instance::new(&train, &groups, &hyps, config.scenario.loss());
    let hyper = Hyper {
        lambda: row.lambda.unwrap_or(f64::NAN),
        sigma: row.sigma.unwrap_or(0.0),
        eta: row.eta.unwrap_or(1.0),
        learning_rate: row.learning_rate.unwrap_or(f64::NAN),
    };
    fit(row.method, &inst, hyper, row.seed)
}

/// Runs `f` on a thread pool capped by `MULTIGROUP_THREADS` when it is set.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    match std::env::var("MULTIGROUP_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::usage(format!("MULTIGROUP_THREADS: not a count: `{v}`")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::usage(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scenario: Scenario) -> ScenarioConfig {
        ScenarioConfig {
            runs: 2,
            n_train: 60,
            n_val: 60,
            n_test: 200,
            methods: vec![Method::Prepend, Method::GroupPrepend],
            grid: HyperGrid {
                lambda: vec![0.005, 0.05],
                ..HyperGrid::default()
            },
            timing: false,
            ..scenario.preset()
        }
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("nope".parse::<Scenario>().is_err());
    }

    #[test]
    fn one_run_one_method_one_row() {
        let cfg = ScenarioConfig {
            runs: 1,
            methods: vec![Method::Prepend],
            ..small(Scenario::Unbalanced)
        };
        let r = run_scenario(&cfg).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.aggregates.len(), 1);
        assert_eq!(r.aggregates[0].total_loss.se, 0.0);
    }

    #[test]
    fn aggregates_recompute_from_rows() {
        let r = run_scenario(&small(Scenario::Spatial)).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert_eq!(aggregate_rows(&r.config, &r.rows), r.aggregates);
        let a = r.aggregate(Method::GroupPrepend, Criterion::TotalLoss).unwrap();
        let vals: Vec<f64> = r
            .rows
            .iter()
            .filter(|x| x.method == Method::GroupPrepend)
            .map(|x| x.total_loss)
            .collect();
        assert_eq!(a.total_loss, MeanSe::of(&vals));
    }

    #[test]
    fn reruns_are_identical() {
        let cfg = small(Scenario::CriterionSelection);
        assert_eq!(run_scenario(&cfg).unwrap(), run_scenario(&cfg).unwrap());
    }

    #[test]
    fn test_set_is_disjoint_by_seed() {
        let cfg = small(Scenario::Spatial);
        let seeds: Vec<u64> = (0..cfg.runs)
            .flat_map(|r| [derive_seed(cfg.run_seed(r), 1), derive_seed(cfg.run_seed(r), 2)])
            .collect();
        assert!(!seeds.contains(&cfg.test_seed()));
        let t = test_data(&cfg).unwrap();
        let target = data::spatial_target();
        assert!(t.iter().all(|r| r.y == target.eval(r.x[0])));
    }

    #[test]
    fn refit_reproduces_the_evaluated_model() {
        let cfg = small(Scenario::Spatial);
        let r = run_scenario(&cfg).unwrap();
        let test = test_data(&cfg).unwrap();
        let (groups, hyps) = (cfg.scenario.groups(), cfg.hypotheses().unwrap());
        let inst = Instance::new(&test, &groups, &hyps, cfg.scenario.loss());
        for row in &r.rows {
            let e = evaluate(&refit(&cfg, row).unwrap().model, &inst);
            assert_eq!(e.total_loss.to_bits(), row.total_loss.to_bits());
        }
    }

    #[test]
    fn mean_se() {
        let m = MeanSe::of(&[1.0, 2.0, 3.0]);
        assert_eq!(m.mean, 2.0);
        assert!((m.se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
