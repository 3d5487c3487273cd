//! Experiment harness: configuration, trial scheduling and CSV/JSON outputs.
//!
//! An [`ExperimentConfig`] names one of five experiments. Trials run on a
//! bounded worker pool and are gathered in trial-index order, so every CSV
//! is a function of the configuration and its master seed only.

mod experiments;
mod stats;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::generators::{Activation, EntryDistribution, ModelKind};
use crate::optimizers::ObjectiveKind;

pub use experiments::{emit_tables, run_concentration, run_predict_vs_empirical, run_r_sweep, run_rate_fit, TableRow};
pub use stats::{line_fit, loglog_fit, mean_std, semilog_fit, LineFit};

/// Version of the manifest layout.
pub const SCHEMA_VERSION: u32 = 1;
/// Matrix entry budget `n·d` of the r-sweep.
pub const DEFAULT_ENTRIES: usize = 1 << 20;
/// Iteration cap of full-batch methods.
pub const DEFAULT_MAX_ITER: usize = 1000;
/// Iteration cap of full-batch methods in the r-sweep.
pub const R_SWEEP_MAX_ITER: usize = 5000;
/// SGD runs for at most this many times `⌈n/batch⌉` epochs.
pub const SGD_EPOCH_FACTOR: usize = 50;
/// Fewest points accepted by a slope fit.
pub const MIN_FIT_POINTS: usize = 16;
/// Default ε of full-batch methods.
pub const EPS_FULL_BATCH: f64 = 1e-6;
/// Default ε of SGD.
pub const EPS_SGD: f64 = 1e-4;

/// The experiments the harness can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Halting-time mean and spread across sizes and entry distributions.
    Concentration,
    /// Mean halting time as a function of `r = d/n` at fixed `n·d`.
    RSweep,
    /// Log-log slopes of gradient norms and worst-case ratios.
    RateFit,
    /// Predicted `τ_ε` against the empirical mean halting time.
    PredictVsEmpirical,
    /// Average, adversarial and worst-case rate tables.
    Tables,
}

impl ExperimentKind {
    /// All experiments, in CLI order.
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Concentration,
        ExperimentKind::RSweep,
        ExperimentKind::RateFit,
        ExperimentKind::PredictVsEmpirical,
        ExperimentKind::Tables,
    ];

    /// Snake-case name used on the command line and in file names.
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Concentration => "concentration",
            ExperimentKind::RSweep => "r_sweep",
            ExperimentKind::RateFit => "rate_fit",
            ExperimentKind::PredictVsEmpirical => "predict_vs_empirical",
            ExperimentKind::Tables => "tables",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// Optimizer driven by an experiment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Gradient descent with step `1/λ⁺_H`.
    #[default]
    Gd,
    /// Nesterov, convex variant at `r = 1` and strongly convex otherwise.
    Nesterov,
    /// Polyak momentum.
    Polyak,
    /// Mini-batch SGD.
    Sgd,
}

impl Algorithm {
    /// Name written to output rows.
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gd => "gd",
            Algorithm::Nesterov => "nesterov",
            Algorithm::Polyak => "polyak",
            Algorithm::Sgd => "sgd",
        }
    }
}

fn default_distributions() -> Vec<EntryDistribution> {
    vec![EntryDistribution::Gaussian]
}

fn default_objective() -> ObjectiveKind {
    ObjectiveKind::LeastSquares
}

fn one() -> f64 {
    1.0
}

fn default_noise() -> f64 {
    0.01
}

fn default_entries() -> usize {
    DEFAULT_ENTRIES
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

/// JSON configuration of an experiment.
///
/// Noise levels are given as `R̃²`. Fields an experiment does not use are
/// ignored by it; see the README for the defaults of each experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Experiment to run.
    pub experiment: ExperimentKind,
    /// Data model.
    #[serde(default)]
    pub model: ModelKind,
    /// Entry distributions of the isotropic model, one cell each.
    #[serde(default = "default_distributions")]
    pub distributions: Vec<EntryDistribution>,
    /// Optimizer.
    #[serde(default)]
    pub method: Algorithm,
    /// Loss.
    #[serde(default = "default_objective")]
    pub objective: ObjectiveKind,
    /// Ratio `d/n`.
    #[serde(default = "one")]
    pub r: f64,
    /// Entry standard deviation.
    #[serde(default = "one")]
    pub sigma: f64,
    /// Noise level `R̃²`.
    #[serde(default = "default_noise")]
    pub r_tilde_sq: f64,
    /// Signal magnitude `R`; when absent `x₀` and `x̃` are independent and `R = √2`.
    #[serde(default)]
    pub big_r: Option<f64>,
    /// Halting threshold on `‖∇f‖²`.
    #[serde(default)]
    pub eps: Option<f64>,
    /// Feature counts, ascending; the experiment default when absent.
    #[serde(default)]
    pub d_grid: Option<Vec<usize>>,
    /// Ratios of the r-sweep, or of the strongly convex table rows.
    #[serde(default)]
    pub r_grid: Option<Vec<f64>>,
    /// Noise levels `R̃²` of the r-sweep and the rate fit.
    #[serde(default)]
    pub noise_grid: Option<Vec<f64>>,
    /// Entry budget `n·d` of the r-sweep.
    #[serde(default = "default_entries")]
    pub entries: usize,
    /// Mini-batch size is `n / batch_divisor`.
    #[serde(default)]
    pub batch_divisor: Option<usize>,
    /// Trials per cell; overrides the `⌈2¹²/√d⌉` rule.
    #[serde(default)]
    pub trials: Option<usize>,
    /// Upper limit applied to the `⌈2¹²/√d⌉` rule.
    #[serde(default)]
    pub trials_cap: Option<usize>,
    /// Iteration cap (optimizer steps).
    #[serde(default)]
    pub max_iter: Option<usize>,
    /// Iterations of the rate fit; defaults to `d`.
    #[serde(default)]
    pub iterations: Option<usize>,
    /// Reference iteration of the tables.
    #[serde(default)]
    pub k_ref: Option<usize>,
    /// Master seed.
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; defaults to the available parallelism.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Output directory.
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Activation of the one-hidden-layer model.
    #[serde(default)]
    pub activation: Option<Activation>,
    /// Hidden width of the one-hidden-layer model.
    #[serde(default)]
    pub m: Option<usize>,
    /// Covariance profile of the correlated model.
    #[serde(default)]
    pub sigma_profile: Option<Vec<f64>>,
    /// Weight scale of the one-hidden-layer model.
    #[serde(default)]
    pub sigma_w: Option<f64>,
    /// Input scale of the one-hidden-layer model.
    #[serde(default)]
    pub sigma_y: Option<f64>,
}

impl ExperimentConfig {
    /// Configuration with every field at its default.
    pub fn new(experiment: ExperimentKind) -> Self {
        Self::from_value(serde_json::json!({ "experiment": experiment })).expect("defaults deserialize")
    }

    /// Parses a JSON document, applies `key=value` overrides and validates.
    pub fn from_json(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text)?;
        for item in overrides {
            apply_override(&mut value, item)?;
        }
        Self::from_value(value)
    }

    /// Parses a config file for `experiment`. The file may omit the
    /// `experiment` field but must not name a different one.
    pub fn for_experiment(text: &str, experiment: ExperimentKind, overrides: &[String]) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text)?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| Error::Config("config must be a JSON object".into()))?;
        match obj.get("experiment") {
            None => {
                obj.insert("experiment".into(), Value::String(experiment.name().into()));
            }
            Some(Value::String(name)) if name == experiment.name() => {}
            Some(other) => {
                return Err(Error::Config(format!(
                    "config names experiment {other} but `{}` was requested",
                    experiment.name()
                )))
            }
        }
        for item in overrides {
            apply_override(&mut value, item)?;
        }
        Self::from_value(value)
    }

    /// Deserializes and validates a JSON value.
    pub fn from_value(value: Value) -> Result<Self> {
        let config: Self = serde_json::from_value(value)?;
        config.validate()?;
        Ok(config)
    }

    /// Checks ranges and grid ordering.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.r > 0.0 && self.r.is_finite()) {
            return bad(format!("r must be positive, got {}", self.r));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.r_tilde_sq >= 0.0 && self.r_tilde_sq.is_finite()) {
            return bad(format!("r_tilde_sq must be nonnegative, got {}", self.r_tilde_sq));
        }
        if let Some(eps) = self.eps {
            if !(eps >= 0.0 && eps.is_finite()) {
                return bad(format!("eps must be nonnegative, got {eps}"));
            }
        }
        let empty = |name: &str| Err(Error::Config(format!("{name} must not be empty")));
        if let Some(grid) = &self.d_grid {
            if grid.is_empty() {
                return empty("d_grid");
            }
            if grid.contains(&0) {
                return bad("d_grid entries must be positive".into());
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return bad("d_grid must be strictly ascending".into());
            }
        }
        if let Some(grid) = &self.r_grid {
            if grid.is_empty() {
                return empty("r_grid");
            }
            if grid.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
                return bad("r_grid entries must be positive".into());
            }
        }
        if let Some(grid) = &self.noise_grid {
            if grid.is_empty() {
                return empty("noise_grid");
            }
            if grid.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return bad("noise_grid entries must be nonnegative".into());
            }
        }
        if self.distributions.is_empty() {
            return bad("distributions must not be empty".into());
        }
        if self.batch_divisor == Some(0) || self.trials == Some(0) || self.trials_cap == Some(0) {
            return bad("batch_divisor, trials and trials_cap must be positive".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        if self.entries == 0 {
            return bad("entries must be positive".into());
        }
        Ok(())
    }

    /// Halting threshold: the configured value or the method default.
    pub fn eps(&self) -> f64 {
        self.eps.unwrap_or(if self.method == Algorithm::Sgd { EPS_SGD } else { EPS_FULL_BATCH })
    }

    /// Trials for feature count `d`: the override, else `⌈2¹²/√d⌉` capped.
    pub fn trials_for(&self, d: usize) -> usize {
        if let Some(t) = self.trials {
            return t;
        }
        let rule = (4096.0 / (d as f64).sqrt()).ceil() as usize;
        let rule = rule.max(1);
        self.trials_cap.map_or(rule, |cap| rule.min(cap))
    }

    /// Mini-batch size for `n` samples (`n/16`, or `n/8` in the r-sweep).
    pub fn batch_for(&self, n: usize) -> usize {
        let default = if self.experiment == ExperimentKind::RSweep { 8 } else { 16 };
        (n / self.batch_divisor.unwrap_or(default)).max(1)
    }

    /// Iteration cap in optimizer steps for `n` samples.
    pub fn max_iter_for(&self, n: usize) -> usize {
        if let Some(m) = self.max_iter {
            return m;
        }
        match self.method {
            Algorithm::Sgd => {
                let per_epoch = n.div_ceil(self.batch_for(n));
                SGD_EPOCH_FACTOR * per_epoch * per_epoch
            }
            _ if self.experiment == ExperimentKind::RSweep => R_SWEEP_MAX_ITER,
            _ => DEFAULT_MAX_ITER,
        }
    }

    /// Worker threads of the trial pool.
    pub fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

/// Applies `key=value` to a JSON object. Dotted keys address nested objects;
/// the value is parsed as JSON and falls back to a string.
pub fn apply_override(target: &mut Value, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override `{item}` has an empty key")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_owned()));
    let mut node = target;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}` descends into a non-object")))?;
        if i + 1 == parts.len() {
            obj.insert((*part).to_owned(), value);
            return Ok(());
        }
        node = obj.entry((*part).to_owned()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// One trial of an experiment. CSV columns follow the field order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    /// Experiment name.
    pub experiment: String,
    /// Features.
    pub d: usize,
    /// Samples.
    pub n: usize,
    /// Configured ratio `d/n`.
    pub r: f64,
    /// Entry distribution.
    pub distribution: String,
    /// Method actually run (`gd`, `nesterov_cvx`, `nesterov_sc`, `polyak`, `sgd`).
    pub method: String,
    /// Noise level `R̃²`.
    pub r_tilde_sq: f64,
    /// Trial index within the cell.
    pub trial: usize,
    /// Instance seed; rebuilding the instance from it reproduces the row.
    pub seed: u64,
    /// Halting time, empty when censored or not applicable.
    pub t_eps: Option<usize>,
    /// Whether the run hit the iteration cap before halting.
    pub censored: bool,
    /// Unit of `t_eps` and `iterations`: `iteration` or `epoch`.
    pub unit: String,
    /// Predicted halting time (per cell, or per trial in `predict_vs_empirical`).
    pub tau_prediction: Option<usize>,
    /// Recorded gradient evaluations after `x₀`.
    pub iterations: usize,
    /// `‖∇f(x₀)‖²`.
    pub grad_initial: f64,
    /// Last recorded `‖∇f‖²`.
    pub grad_final: f64,
    /// Power-iteration estimate of `λ⁺_H`.
    pub lambda_max_est: f64,
    /// Step size (SGD).
    pub step: Option<f64>,
    /// Step solving `ᾱLM = ε` before capping (SGD, under-parametrized).
    pub step_target: Option<f64>,
    /// Step cap `1/(L·B²)`, or the step `2/(L·B²)` when over-parametrized (SGD).
    pub step_cap: Option<f64>,
    /// Fitted log-log slope of the second half of the run (rate fit).
    pub slope: Option<f64>,
    /// Slope of the predicted curve over the same window (rate fit).
    pub predicted_slope: Option<f64>,
    /// `‖∇f(x_d)‖²` (rate fit).
    pub grad_at_d: Option<f64>,
    /// Worst-case bound over the measured value at `k = d` (rate fit).
    pub ub_ratio: Option<f64>,
}

/// Aggregate of one cell, computed from its [`ResultRow`]s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    /// Experiment name.
    pub experiment: String,
    /// Features.
    pub d: usize,
    /// Samples.
    pub n: usize,
    /// Configured ratio.
    pub r: f64,
    /// Entry distribution.
    pub distribution: String,
    /// Method.
    pub method: String,
    /// Noise level `R̃²`.
    pub r_tilde_sq: f64,
    /// Unit of the halting times.
    pub unit: String,
    /// Trials run.
    pub trials: usize,
    /// Trials that halted.
    pub completed: usize,
    /// Trials that hit the cap.
    pub censored: usize,
    /// Mean halting time over completed trials.
    pub mean_t_eps: Option<f64>,
    /// Sample standard deviation of the halting time.
    pub std_t_eps: Option<f64>,
    /// Mean predicted halting time over the trials.
    pub tau_prediction: Option<f64>,
    /// Mean of `t_eps − tau_prediction` over completed trials.
    pub mean_minus_tau: Option<f64>,
    /// Mean fitted slope.
    pub mean_slope: Option<f64>,
    /// Sample standard deviation of the fitted slope.
    pub std_slope: Option<f64>,
    /// Slope of the predicted curve.
    pub predicted_slope: Option<f64>,
    /// Smallest worst-case ratio.
    pub min_ub_ratio: Option<f64>,
    /// Sample variance of the worst-case ratio.
    pub var_ub_ratio: Option<f64>,
}

/// Rows, per-cell summaries and tables produced by one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    /// Experiment that produced the output.
    pub kind: ExperimentKind,
    /// Per-trial rows, ordered by cell then trial.
    pub rows: Vec<ResultRow>,
    /// Per-cell aggregates, in the order cells first appear in `rows`.
    pub summary: Vec<SummaryRow>,
    /// Rate tables (tables experiment only).
    pub tables: Vec<TableRow>,
}

/// Groups `rows` by cell and aggregates each group.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let key = |r: &ResultRow| {
        (r.d, r.n, r.r.to_bits(), r.distribution.clone(), r.method.clone(), r.r_tilde_sq.to_bits())
    };
    let mut keys = Vec::new();
    for row in rows {
        let k = key(row);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.iter()
        .map(|k| {
            let group: Vec<&ResultRow> = rows.iter().filter(|r| &key(r) == k).collect();
            let first = group[0];
            let times: Vec<f64> = group.iter().filter_map(|r| r.t_eps).map(|t| t as f64).collect();
            let censored = group.iter().filter(|r| r.censored).count();
            let taus: Vec<f64> = group.iter().filter_map(|r| r.tau_prediction).map(|t| t as f64).collect();
            let gaps: Vec<f64> = group
                .iter()
                .filter_map(|r| Some(r.t_eps? as f64 - r.tau_prediction? as f64))
                .collect();
            let (mean_t, std_t) = mean_std(&times).unzip();
            let slopes: Vec<f64> = group.iter().filter_map(|r| r.slope).collect();
            let (mean_slope, std_slope) = mean_std(&slopes).unzip();
            let ratios: Vec<f64> = group.iter().filter_map(|r| r.ub_ratio).collect();
            let min_ratio = ratios.iter().copied().reduce(f64::min);
            let var_ratio = mean_std(&ratios).map(|(_, s)| s * s);
            SummaryRow {
                experiment: first.experiment.clone(),
                d: first.d,
                n: first.n,
                r: first.r,
                distribution: first.distribution.clone(),
                method: first.method.clone(),
                r_tilde_sq: first.r_tilde_sq,
                unit: first.unit.clone(),
                trials: group.len(),
                completed: times.len(),
                censored,
                mean_t_eps: mean_t,
                std_t_eps: std_t,
                tau_prediction: mean_std(&taus).map(|(m, _)| m),
                mean_minus_tau: mean_std(&gaps).map(|(m, _)| m),
                mean_slope,
                std_slope,
                predicted_slope: first.predicted_slope,
                min_ub_ratio: min_ratio,
                var_ub_ratio: var_ratio,
            }
        })
        .collect()
}

/// Runs the configured experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    match config.experiment {
        ExperimentKind::Concentration => run_concentration(config),
        ExperimentKind::RSweep => run_r_sweep(config),
        ExperimentKind::RateFit => run_rate_fit(config),
        ExperimentKind::PredictVsEmpirical => run_predict_vs_empirical(config),
        ExperimentKind::Tables => emit_tables(config),
    }
}

/// Run metadata written next to the CSV files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Layout version, [`SCHEMA_VERSION`].
    pub schema_version: u32,
    /// Version of this library.
    pub library_version: String,
    /// Experiment name.
    pub experiment: String,
    /// Master seed.
    pub seed: u64,
    /// Full configuration after overrides.
    pub config: ExperimentConfig,
    /// Unit of the halting times (`epoch` for SGD, whose full gradient is
    /// measured once per pass over the data).
    pub halting_unit: String,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
    /// Elapsed wall-clock time of the experiment in seconds.
    pub wall_time_seconds: f64,
}

/// Writes `<name>.csv`, `<name>_summary.csv` (or `tables.csv`) and
/// `<name>_manifest.json` into `dir`.
pub fn write_outputs(config: &ExperimentConfig, output: &ExperimentOutput, dir: &Path, wall_time_seconds: f64) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let name = output.kind.name();
    let mut files = Vec::new();
    if output.kind == ExperimentKind::Tables {
        write_csv(&dir.join("tables.csv"), &output.tables)?;
        files.push("tables.csv".to_owned());
    } else {
        let rows = format!("{name}.csv");
        let summary = format!("{name}_summary.csv");
        write_csv(&dir.join(&rows), &output.rows)?;
        write_csv(&dir.join(&summary), &output.summary)?;
        files.push(rows);
        files.push(summary);
    }
    let manifest_name = format!("{name}_manifest.json");
    files.push(manifest_name.clone());
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        library_version: env!("CARGO_PKG_VERSION").to_owned(),
        experiment: name.to_owned(),
        seed: config.seed,
        config: config.clone(),
        halting_unit: if config.method == Algorithm::Sgd { "epoch" } else { "iteration" }.to_owned(),
        files,
        wall_time_seconds,
    };
    fs::write(dir.join(manifest_name), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}
