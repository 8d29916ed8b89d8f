//! The `multigroup` command.
//!
//! Every subcommand resolves its settings from three layers (built-in
//! defaults, then `--config FILE`, then flags), runs, and writes a manifest
//! of the resolved settings next to its outputs. Passing that manifest back
//! with `--config` repeats the run.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on a usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use multigroup_core::learners::{sleeping_expert, LearnerConfig, Method, SleepingConfig};
use multigroup_core::theory::{
    bound_width, certify_trace, privacy_envelope, recipe_group_prepend, recipe_shaky,
    update_tail_bound,
};
use multigroup_core::{
    BoundedLoss, Dataset, Error as CoreError, GroupFamily, HypothesisClass, Indicator, Instance,
    Predict,
};

use crate::audit::{format_report, report_csv, run_audit, AuditConfig};
use crate::config::{join, Config, RunManifest};
use crate::error::{Error, Result};
use crate::experiments::{
    data, evaluate, refit, run_scenario, tune, with_thread_cap, Criterion, ExperimentResult,
    HyperGrid, Scenario, ScenarioConfig,
};
use crate::io;
use crate::plot::{error_bar_svg, line_svg, BarSeries, LineSeries};

#[derive(Debug, Parser)]
#[command(name = "multigroup", version, about = "Multi-group learning with Prepend-style learners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one learner to a dataset.
    Fit(FitArgs),
    /// Pick hyperparameters on a validation set.
    Tune(TuneArgs),
    /// Run a simulation scenario.
    Experiment(ExperimentArgs),
    /// Monte-Carlo privacy audit of Shaky Prepend.
    DpAudit(AuditArgs),
    /// Theory recipes and bound widths.
    Bounds(BoundsArgs),
}

/// Settings shared by `fit` and `tune`.
#[derive(Debug, Args)]
struct ModelArgs {
    /// Settings file (`key = value` lines); flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training data CSV.
    #[arg(long)]
    data: Option<String>,
    /// Groups CSV (`id,lo,hi`) or `grid:STEP` for an interval grid over the
    /// feature range.
    #[arg(long)]
    groups: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// squared, absolute or zero_one.
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    loss_scale: Option<String>,
    /// Constant hypotheses from `hyp_lo` to `hyp_hi` in steps of `hyp_step`.
    #[arg(long)]
    hyp_lo: Option<String>,
    #[arg(long)]
    hyp_hi: Option<String>,
    #[arg(long)]
    hyp_step: Option<String>,
    #[arg(long)]
    max_iters: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    /// With `--delta`, sets sigma from a privacy budget.
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    learning_rate: Option<String>,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Validation data CSV.
    #[arg(long)]
    val: Option<String>,
    /// total_loss or worst_group_loss.
    #[arg(long)]
    criterion: Option<String>,
    #[arg(long)]
    lambda_grid: Option<String>,
    #[arg(long)]
    sigma_grid: Option<String>,
    #[arg(long)]
    eta_grid: Option<String>,
    #[arg(long)]
    learning_rate_grid: Option<String>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// criterion_selection, unbalanced, spatial or fractional_ablation.
    scenario: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    runs: Option<String>,
    /// Training sample size.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    n_val: Option<String>,
    #[arg(long)]
    n_test: Option<String>,
    /// Label noise standard deviation.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Comma-separated method names.
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated tuning criteria.
    #[arg(long)]
    criteria: Option<String>,
    #[arg(long)]
    lambda_grid: Option<String>,
    #[arg(long)]
    sigma_grid: Option<String>,
    #[arg(long)]
    eta_grid: Option<String>,
    #[arg(long)]
    learning_rate_grid: Option<String>,
    #[arg(long)]
    hyp_step: Option<String>,
    /// Use the Shaky Prepend recipe at this beta instead of tuning.
    #[arg(long)]
    recipe_beta: Option<String>,
    /// `false` writes wall_ms as 0 so reruns are bit-identical.
    #[arg(long)]
    timing: Option<String>,
    /// Also plot run 0's fitted predictors against the target.
    #[arg(long)]
    plot_fit: bool,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    /// Replaces the recipe lambda.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    max_updates: Option<String>,
    #[arg(long)]
    max_prefix: Option<String>,
    #[arg(long)]
    min_hits: Option<String>,
    /// Also write `audit.csv` and a manifest here.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated sample sizes.
    #[arg(long)]
    n: Option<String>,
    /// Number of groups.
    #[arg(long)]
    num_groups: Option<String>,
    #[arg(long)]
    num_hypotheses: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    /// Group count for the bound width; defaults to n / num_groups.
    #[arg(long)]
    group_count: Option<String>,
    /// Loss of the best hypothesis used in the update and privacy bounds.
    #[arg(long)]
    alpha: Option<String>,
    /// Also write `bounds.csv` and a manifest here.
    #[arg(long)]
    out: Option<String>,
}

/// Flag layer from `(key, value)` pairs that were given.
fn flags(pairs: &[(&str, &Option<String>)]) -> Config {
    let mut c = Config::new();
    for (k, v) in pairs {
        if let Some(v) = v {
            c.set(*k, v.clone());
        }
    }
    c
}

/// `defaults < file < flags`; the file must not belong to another command.
fn resolve(command: &str, defaults: Config, file: Option<&Path>, flags: &Config) -> Result<Config> {
    let file = match file {
        Some(p) => Config::load(p)?,
        None => Config::new(),
    };
    if let Some(c) = file.get("command") {
        if c != command {
            return Err(Error::usage(format!("config file is for `{c}`, not `{command}`")));
        }
    }
    let mut file = file;
    for k in file.iter().map(|(k, _)| k.to_string()).collect::<Vec<_>>() {
        if crate::config::is_meta_key(&k) {
            file.remove(&k);
        }
    }
    Ok(defaults.overlay(&file).overlay(flags))
}

fn out_dir(c: &Config) -> Result<PathBuf> {
    let dir = PathBuf::from(c.value::<String>("out")?);
    fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
    Ok(dir)
}

fn parse_loss(c: &Config) -> Result<BoundedLoss> {
    let scale: f64 = c.value("loss_scale")?;
    let loss = match c.value::<String>("loss")?.replace('-', "_").as_str() {
        "squared" => BoundedLoss::squared(scale)?,
        "absolute" => BoundedLoss::absolute(scale)?,
        "zero_one" => BoundedLoss::ZeroOne,
        other => return Err(Error::usage(format!("unknown loss `{other}`"))),
    };
    Ok(loss)
}

fn feature_range(d: &Dataset) -> (f64, f64) {
    d.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
        (lo.min(r.x[0]), hi.max(r.x[0]))
    })
}

/// A groups file, or `grid:STEP`: the interval grid of `[0, 1]` mapped onto
/// `[lo, hi]`.
fn load_groups(spec: &str, lo: f64, hi: f64) -> Result<GroupFamily> {
    let Some(step) = spec.strip_prefix("grid:") else {
        return io::read_groups(spec);
    };
    let step: f64 = step
        .parse()
        .map_err(|_| Error::usage(format!("groups: bad grid step `{step}`")))?;
    let unit = data::interval_grid_groups(step, step)?;
    let span = if hi > lo { hi - lo } else { 1.0 };
    let scaled = unit
        .iter()
        .map(|g| match g.indicator {
            Indicator::Interval { feature, lo: a, hi: b } => Indicator::Interval {
                feature,
                lo: lo + a * span,
                hi: lo + b * span,
            },
            ref other => other.clone(),
        })
        .collect();
    Ok(GroupFamily::new(scaled)?)
}

/// Defaults for the data-dependent settings of `fit` and `tune`.
fn model_defaults(data: Option<&Dataset>) -> Config {
    let mut c = Config::from_pairs([
        ("groups", "grid:0.05"),
        ("method", "group_prepend"),
        ("seed", "0"),
        ("loss", "squared"),
        ("loss_scale", "1"),
        ("hyp_step", "0.1"),
        ("out", "out"),
    ]);
    if let Some(d) = data {
        let (lo, hi) = d
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.y), hi.max(r.y)));
        c.set("hyp_lo", lo.floor().to_string());
        c.set("hyp_hi", hi.ceil().to_string());
    }
    c
}

const MODEL_KEYS: [&str; 11] = [
    "data", "groups", "method", "seed", "loss", "loss_scale", "hyp_lo", "hyp_hi", "hyp_step",
    "max_iters", "out",
];

fn model_flags(m: &ModelArgs) -> Config {
    flags(&[
        ("data", &m.data),
        ("groups", &m.groups),
        ("method", &m.method),
        ("seed", &m.seed),
        ("loss", &m.loss),
        ("loss_scale", &m.loss_scale),
        ("hyp_lo", &m.hyp_lo),
        ("hyp_hi", &m.hyp_hi),
        ("hyp_step", &m.hyp_step),
        ("max_iters", &m.max_iters),
        ("out", &m.out),
    ])
}

/// Resolves settings in two steps: the data path first, then defaults that
/// depend on the data.
fn resolve_model(command: &str, file: Option<&Path>, flag_layer: &Config) -> Result<(Config, Dataset)> {
    let first = resolve(command, model_defaults(None), file, flag_layer)?;
    let data = io::read_dataset(first.value::<String>("data")?)?;
    let c = resolve(command, model_defaults(Some(&data)), file, flag_layer)?;
    Ok((c, data))
}

struct Problem {
    groups: GroupFamily,
    hypotheses: HypothesisClass,
    loss: BoundedLoss,
    method: Method,
    seed: u64,
}

fn problem(c: &Config, data: &Dataset) -> Result<Problem> {
    let (lo, hi) = feature_range(data);
    let method: Method = c.value("method")?;
    Ok(Problem {
        groups: load_groups(&c.value::<String>("groups")?, lo, hi)?,
        hypotheses: HypothesisClass::constant_grid(c.value("hyp_lo")?, c.value("hyp_hi")?, c.value("hyp_step")?)?,
        loss: parse_loss(c)?,
        method,
        seed: c.value("seed")?,
    })
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let mut flag_layer = model_flags(&a.model).overlay(&flags(&[
        ("lambda", &a.lambda),
        ("sigma", &a.sigma),
        ("epsilon", &a.epsilon),
        ("delta", &a.delta),
        ("eta", &a.eta),
        ("learning_rate", &a.learning_rate),
    ]));
    let (mut c, data) = resolve_model("fit", a.model.config.as_deref(), &flag_layer)?;
    let mut keys = MODEL_KEYS.to_vec();
    keys.extend(["lambda", "sigma", "epsilon", "delta", "eta", "learning_rate"]);
    c.check_keys(&keys)?;
    let p = problem(&c, &data)?;
    let dir = out_dir(&c)?;

    if p.method == Method::SleepingExpert {
        if !c.contains("learning_rate") {
            flag_layer.set("learning_rate", "2");
            c.set("learning_rate", "2");
        }
        let cfg = SleepingConfig::new(c.value("learning_rate")?).with_seed(p.seed);
        let (pred, trace) = sleeping_expert(&data, &p.groups, &p.hypotheses, p.loss, &cfg)?;
        let mut m = RunManifest::new("fit", c);
        let pred_path = dir.join("predictor.csv");
        io::write_sleeping(&pred_path, &trace, p.hypotheses.len())?;
        m.output("predictor", &pred_path);
        let manifest = dir.join("manifest.txt");
        m.write(&manifest)?;
        let inst = Instance::new(&data, &p.groups, &p.hypotheses, p.loss);
        let e = evaluate(&pred, &inst);
        println!(
            "method = {}\nonline_loss = {}\ntrain_loss = {}\nworst_group_loss = {}",
            p.method, trace.online_loss, e.total_loss, e.worst_group_loss
        );
        return Ok(());
    }

    let lambda: f64 = c.value("lambda")?;
    let mut cfg = LearnerConfig::new(lambda).with_seed(p.seed);
    match (c.optional::<f64>("epsilon")?, c.optional::<f64>("delta")?) {
        (Some(eps), Some(delta)) => {
            if c.contains("sigma") {
                return Err(Error::usage("give either sigma or epsilon and delta, not both"));
            }
            cfg = cfg.with_privacy(eps, delta);
        }
        (None, None) => {
            if !c.contains("sigma") {
                c.set("sigma", "0");
            }
            cfg = cfg.with_sigma(c.value("sigma")?);
        }
        _ => return Err(Error::usage("epsilon and delta go together")),
    }
    if !c.contains("eta") {
        c.set("eta", if p.method.is_fractional() { "0.5" } else { "1" });
    }
    cfg = cfg.with_eta(c.value("eta")?);
    if let Some(cap) = c.optional::<usize>("max_iters")? {
        cfg = cfg.with_max_iters(cap);
    }

    let mut m = RunManifest::new("fit", c);
    let trace_path = dir.join("trace.csv");
    let (chain, trace) = match p.method.fit_chain(&data, &p.groups, &p.hypotheses, p.loss, &cfg) {
        Ok(r) => r,
        Err(CoreError::MaxIterations { cap, theoretical_cap, trace }) => {
            io::write_trace(&trace_path, &trace)?;
            m.output("trace", &trace_path);
            m.write(dir.join("manifest.txt"))?;
            return Err(CoreError::MaxIterations { cap, theoretical_cap, trace }.into());
        }
        Err(e) => return Err(e.into()),
    };
    let pred_path = dir.join("predictor.csv");
    let cert_path = dir.join("certificate.txt");
    io::write_chain(&pred_path, &chain)?;
    io::write_trace(&trace_path, &trace)?;
    let cert = certify_trace(&trace, &cfg)?;
    io::write_text(&cert_path, &io::format_certificate(&cert))?;
    m.output("predictor", &pred_path);
    m.output("trace", &trace_path);
    m.output("certificate", &cert_path);
    m.write(dir.join("manifest.txt"))?;
    println!(
        "method = {}\nupdates = {}\nalpha = {}\nfinal_loss = {}\nslack_holds = {}\ncap_violated = {}",
        p.method,
        trace.num_updates,
        trace.alpha,
        trace.final_loss(),
        cert.slack_holds,
        cert.cap_violated()
    );
    Ok(())
}

fn grid_defaults() -> Config {
    let g = HyperGrid::default();
    Config::from_pairs([
        ("lambda_grid", join(&g.lambda)),
        ("sigma_grid", join(&g.sigma)),
        ("eta_grid", join(&g.eta)),
        ("learning_rate_grid", join(&g.learning_rate)),
    ])
}

fn grid_from(c: &Config) -> Result<HyperGrid> {
    let g = HyperGrid {
        lambda: c.list("lambda_grid")?,
        sigma: c.list("sigma_grid")?,
        eta: c.list("eta_grid")?,
        learning_rate: c.list("learning_rate_grid")?,
    };
    g.validate()?;
    Ok(g)
}

fn cmd_tune(a: TuneArgs) -> Result<()> {
    let flag_layer = model_flags(&a.model).overlay(&flags(&[
        ("val", &a.val),
        ("criterion", &a.criterion),
        ("lambda_grid", &a.lambda_grid),
        ("sigma_grid", &a.sigma_grid),
        ("eta_grid", &a.eta_grid),
        ("learning_rate_grid", &a.learning_rate_grid),
    ]));
    let file = a.model.config.as_deref();
    let (c, data) = resolve_model("tune", file, &flag_layer)?;
    let extra = grid_defaults().overlay(&Config::from_pairs([("criterion", "total_loss")]));
    let c = extra.overlay(&c);
    let mut keys = MODEL_KEYS.to_vec();
    keys.extend(["val", "criterion", "lambda_grid", "sigma_grid", "eta_grid", "learning_rate_grid"]);
    c.check_keys(&keys)?;
    let p = problem(&c, &data)?;
    let val = io::read_dataset(c.value::<String>("val")?)?;
    let criterion: Criterion = c.value("criterion")?;
    let grid = grid_from(&c)?.points(p.method);
    let dir = out_dir(&c)?;
    let outcome = tune(&data, &val, &p.groups, &p.hypotheses, p.method, &grid, criterion, p.loss, p.seed)?;

    let table_path = dir.join("tune.csv");
    let mut t = String::from("lambda,sigma,eta,learning_rate,score,total_loss,worst_group_loss,num_updates,capped\n");
    for r in &outcome.table {
        let (tl, wl) = r
            .validation
            .as_ref()
            .map_or((String::new(), String::new()), |v| (v.total_loss.to_string(), v.worst_group_loss.to_string()));
        t.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.hyper.lambda,
            r.hyper.sigma,
            r.hyper.eta,
            r.hyper.learning_rate,
            r.score,
            tl,
            wl,
            r.num_updates,
            r.validation.is_none()
        ));
    }
    io::write_text(&table_path, &t)?;
    let mut m = RunManifest::new("tune", c);
    m.output("table", &table_path);
    if let crate::experiments::Model::Chain(chain) = &outcome.fitted.model {
        let pred_path = dir.join("predictor.csv");
        io::write_chain(&pred_path, chain)?;
        m.output("predictor", &pred_path);
    }
    m.write(dir.join("manifest.txt"))?;
    let best = outcome.best();
    println!(
        "method = {}\ncriterion = {}\nlambda = {}\nsigma = {}\neta = {}\nlearning_rate = {}\nscore = {}",
        p.method, criterion, best.lambda, best.sigma, best.eta, best.learning_rate, outcome.table[outcome.best_index].score
    );
    Ok(())
}

const SCENARIO_KEYS: [&str; 17] = [
    "scenario",
    "n_train",
    "n_val",
    "n_test",
    "noise_sd",
    "seed",
    "methods",
    "criteria",
    "runs",
    "hyp_step",
    "lambda_grid",
    "sigma_grid",
    "eta_grid",
    "learning_rate_grid",
    "recipe_beta",
    "timing",
    "out",
];

/// Settings of a scenario configuration, all defaults spelled out.
pub fn scenario_settings(s: &ScenarioConfig) -> Config {
    let names = |m: &[Method]| m.iter().map(|m| m.name()).collect::<Vec<_>>().join(",");
    Config::from_pairs([
        ("scenario", s.scenario.name().to_string()),
        ("n_train", s.n_train.to_string()),
        ("n_val", s.n_val.to_string()),
        ("n_test", s.n_test.to_string()),
        ("noise_sd", s.noise_sd.to_string()),
        ("seed", s.seed.to_string()),
        ("methods", names(&s.methods)),
        ("criteria", s.criteria.iter().map(|c| c.name()).collect::<Vec<_>>().join(",")),
        ("runs", s.runs.to_string()),
        ("hyp_step", s.hyp_step.to_string()),
        ("lambda_grid", join(&s.grid.lambda)),
        ("sigma_grid", join(&s.grid.sigma)),
        ("eta_grid", join(&s.grid.eta)),
        ("learning_rate_grid", join(&s.grid.learning_rate)),
        ("recipe_beta", s.recipe_beta.map_or_else(String::new, |b| b.to_string())),
        ("timing", s.timing.to_string()),
    ])
}

pub fn scenario_from(c: &Config) -> Result<ScenarioConfig> {
    let s = ScenarioConfig {
        scenario: c.value::<String>("scenario")?.parse()?,
        n_train: c.value("n_train")?,
        n_val: c.value("n_val")?,
        n_test: c.value("n_test")?,
        noise_sd: c.value("noise_sd")?,
        seed: c.value("seed")?,
        methods: c.list("methods")?,
        criteria: c.list("criteria")?,
        runs: c.value("runs")?,
        hyp_step: c.value("hyp_step")?,
        grid: grid_from(c)?,
        recipe_beta: c.optional("recipe_beta")?,
        timing: c.value("timing")?,
    };
    s.validate()?;
    Ok(s)
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let flag_layer = flags(&[
        ("scenario", &a.scenario),
        ("runs", &a.runs),
        ("n_train", &a.n),
        ("n_val", &a.n_val),
        ("n_test", &a.n_test),
        ("noise_sd", &a.noise),
        ("seed", &a.seed),
        ("methods", &a.methods),
        ("criteria", &a.criteria),
        ("lambda_grid", &a.lambda_grid),
        ("sigma_grid", &a.sigma_grid),
        ("eta_grid", &a.eta_grid),
        ("learning_rate_grid", &a.learning_rate_grid),
        ("hyp_step", &a.hyp_step),
        ("recipe_beta", &a.recipe_beta),
        ("timing", &a.timing),
        ("out", &a.out),
    ]);
    let probe = resolve("experiment", Config::new(), a.config.as_deref(), &flag_layer)?;
    let scenario: Scenario = probe
        .get("scenario")
        .ok_or_else(|| Error::usage("no scenario given"))?
        .parse()?;
    let mut defaults = scenario_settings(&scenario.preset());
    defaults.set("out", "out");
    let c = resolve("experiment", defaults, a.config.as_deref(), &flag_layer)?;
    c.check_keys(&SCENARIO_KEYS)?;
    let cfg = scenario_from(&c)?;
    let dir = out_dir(&c)?;
    let result = with_thread_cap(|| run_scenario(&cfg))??;

    let mut m = RunManifest::new("experiment", c);
    let results = dir.join("results.csv");
    io::write_results(&results, &result.rows)?;
    m.output("results", &results);
    for (metric, label) in [("total_loss", "total loss"), ("worst_group_loss", "worst-group loss")] {
        let path = dir.join(format!("{metric}.svg"));
        io::write_text(&path, &metric_plot(&result, metric, label))?;
        m.output(metric, &path);
    }
    if a.plot_fit {
        let path = dir.join("fit.svg");
        io::write_text(&path, &fit_plot(&result)?)?;
        m.output("fit", &path);
    }
    m.write(dir.join("manifest.txt"))?;

    println!(
        "{:<24} {:<17} {:>22} {:>22}",
        "method", "criterion", "total loss", "worst-group loss"
    );
    for ag in &result.aggregates {
        println!(
            "{:<24} {:<17} {:>11.6} ± {:<8.6} {:>11.6} ± {:<8.6}",
            ag.method.name(),
            ag.criterion.name(),
            ag.total_loss.mean,
            ag.total_loss.se,
            ag.worst_group_loss.mean,
            ag.worst_group_loss.se
        );
    }
    Ok(())
}

fn metric_plot(r: &ExperimentResult, metric: &str, label: &str) -> String {
    let cats: Vec<String> = r.config.methods.iter().map(|m| m.name().to_string()).collect();
    let series: Vec<BarSeries> = r
        .config
        .criteria
        .iter()
        .map(|&crit| BarSeries {
            name: format!("tuned on {}", crit.name()),
            values: r
                .config
                .methods
                .iter()
                .map(|&m| {
                    r.aggregate(m, crit).map(|a| {
                        let v = if metric == "total_loss" { a.total_loss } else { a.worst_group_loss };
                        (v.mean, v.se)
                    })
                })
                .collect(),
        })
        .collect();
    let title = format!(
        "{}: {} (mean ± SE over {} runs)",
        r.config.scenario, label, r.config.runs
    );
    error_bar_svg(&title, label, &cats, &series)
}

/// Run 0's predictor per method (first criterion) against the target.
fn fit_plot(r: &ExperimentResult) -> Result<String> {
    let design = r.config.scenario.design();
    let (lo, hi) = design.domain();
    let xs: Vec<f64> = (0..=400).map(|i| lo + (hi - lo) * i as f64 / 400.0).collect();
    let mut series = vec![LineSeries {
        name: "target".into(),
        points: xs.iter().map(|&x| (x, design.target.eval(x))).collect(),
        dashed: true,
    }];
    let crit = r.config.criteria[0];
    for &method in &r.config.methods {
        let Some(row) = r
            .rows
            .iter()
            .find(|x| x.run_id == 0 && x.method == method && x.criterion == crit)
        else {
            continue;
        };
        let fitted = refit(&r.config, row)?;
        series.push(LineSeries {
            name: method.name().into(),
            points: xs.iter().map(|&x| (x, fitted.model.predict(&[x]))).collect(),
            dashed: false,
        });
    }
    Ok(line_svg(&format!("{}: fitted predictors, run 0", r.config.scenario), "x", "prediction", &series))
}

fn cmd_dp_audit(a: AuditArgs) -> Result<()> {
    let d = AuditConfig::default();
    let defaults = Config::from_pairs([
        ("n", d.n.to_string()),
        ("trials", d.trials.to_string()),
        ("seed", d.seed.to_string()),
        ("beta", d.beta.to_string()),
        ("lambda", String::new()),
        ("max_updates", d.max_updates.to_string()),
        ("max_prefix", d.max_prefix.to_string()),
        ("min_hits", d.min_hits.to_string()),
        ("out", String::new()),
    ]);
    let flag_layer = flags(&[
        ("n", &a.n),
        ("trials", &a.trials),
        ("seed", &a.seed),
        ("beta", &a.beta),
        ("lambda", &a.lambda),
        ("max_updates", &a.max_updates),
        ("max_prefix", &a.max_prefix),
        ("min_hits", &a.min_hits),
        ("out", &a.out),
    ]);
    let c = resolve("dp-audit", defaults, a.config.as_deref(), &flag_layer)?;
    c.check_keys(&["n", "trials", "seed", "beta", "lambda", "max_updates", "max_prefix", "min_hits", "out"])?;
    let cfg = AuditConfig {
        n: c.value("n")?,
        trials: c.value("trials")?,
        seed: c.value("seed")?,
        beta: c.value("beta")?,
        lambda: c.optional("lambda")?,
        max_updates: c.value("max_updates")?,
        max_prefix: c.value("max_prefix")?,
        min_hits: c.value("min_hits")?,
    };
    let report = with_thread_cap(|| run_audit(&cfg))??;
    print!("{}", format_report(&report));
    if let Some(out) = c.optional::<String>("out")? {
        let dir = PathBuf::from(out);
        fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
        let path = dir.join("audit.csv");
        io::write_text(&path, &report_csv(&report))?;
        let mut m = RunManifest::new("dp-audit", c);
        m.output("audit", &path);
        m.write(dir.join("manifest.txt"))?;
    }
    Ok(())
}

fn cmd_bounds(a: BoundsArgs) -> Result<()> {
    let defaults = Config::from_pairs([
        ("n", "100,1000,10000,100000"),
        ("num_groups", "10"),
        ("num_hypotheses", "10"),
        ("beta", "0.05"),
        ("delta", "0.05"),
        ("group_count", ""),
        ("alpha", "1"),
        ("out", ""),
    ]);
    let flag_layer = flags(&[
        ("n", &a.n),
        ("num_groups", &a.num_groups),
        ("num_hypotheses", &a.num_hypotheses),
        ("beta", &a.beta),
        ("delta", &a.delta),
        ("group_count", &a.group_count),
        ("alpha", &a.alpha),
        ("out", &a.out),
    ]);
    let c = resolve("bounds", defaults, a.config.as_deref(), &flag_layer)?;
    c.check_keys(&["n", "num_groups", "num_hypotheses", "beta", "delta", "group_count", "alpha", "out"])?;
    let ns: Vec<usize> = c.list("n")?;
    if ns.is_empty() {
        return Err(Error::usage("no sample sizes given"));
    }
    let (g, h): (usize, usize) = (c.value("num_groups")?, c.value("num_hypotheses")?);
    let (beta, delta, alpha): (f64, f64, f64) = (c.value("beta")?, c.value("delta")?, c.value("alpha")?);
    let count: Option<usize> = c.optional("group_count")?;

    let mut csv = String::from("n,epsilon,delta_shaky,lambda,lambda_simple,sigma,envelope,group_prepend_lambda,group_count,bound_width,vacuous,update_tail,privacy_envelope\n");
    println!(
        "{:>8} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "n", "eps", "lambda", "lam_simple", "sigma", "envelope", "gp_lambda", "width", "priv_env"
    );
    for &n in &ns {
        let p = recipe_shaky(n, g, h, beta, false)?;
        let ps = recipe_shaky(n, g, h, beta, true)?;
        let gp = recipe_group_prepend(n, g, h, delta)?;
        let k = count.unwrap_or((n / g).max(1));
        let w = bound_width(n, k, g, h, delta)?;
        let tail = update_tail_bound(p.lambda, p.sigma, alpha);
        let env = privacy_envelope(p.epsilon, alpha, p.lambda);
        println!(
            "{:>8} {:>10.5} {:>10.4} {:>10.4} {:>10.5} {:>10.5} {:>10.5} {:>10.4} {:>10.5}",
            n, p.epsilon, p.lambda, ps.lambda, p.sigma, p.envelope, gp.lambda, w.width, env
        );
        csv.push_str(&format!(
            "{n},{},{},{},{},{},{},{},{k},{},{},{tail},{env}\n",
            p.epsilon, p.delta, p.lambda, ps.lambda, p.sigma, p.envelope, gp.lambda, w.width, w.vacuous
        ));
    }
    if let Some(out) = c.optional::<String>("out")? {
        let dir = PathBuf::from(out);
        fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
        let path = dir.join("bounds.csv");
        io::write_text(&path, &csv)?;
        let mut m = RunManifest::new("bounds", c);
        m.output("bounds", &path);
        m.write(dir.join("manifest.txt"))?;
    }
    Ok(())
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) => 2,
        Error::Core(CoreError::InvalidParameter(_)) => 2,
        _ => 1,
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::DpAudit(a) => cmd_dp_audit(a),
        Command::Bounds(a) => cmd_bounds(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_settings_round_trip() {
        for s in Scenario::ALL {
            let p = s.preset();
            assert_eq!(scenario_from(&scenario_settings(&p)).unwrap(), p);
        }
    }

    #[test]
    fn grid_groups_are_rescaled() {
        let g = load_groups("grid:0.5", 2.0, 4.0).unwrap();
        assert_eq!(g.len(), 3 * 2);
        assert!(g.iter().any(|grp| grp.contains(&[2.0]) && grp.contains(&[4.0])));
        assert!(load_groups("grid:x", 0.0, 1.0).is_err());
    }
}
