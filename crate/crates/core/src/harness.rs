//! Experiment harness: single trials, the p grid, the learning-rate
//! sensitivity sweep, optimizer comparisons and plot-ready series.
//!
//! Every run writes `<output_dir>/<run_id>/metrics.csv` (one row per epoch,
//! flushed as it is produced) and `<output_dir>/<run_id>/config.json` (the fully
//! resolved configuration). Sweeps add `<output_dir>/summary.json`.
//!
//! `metrics.csv` header:
//!
//! ```text
//! epoch,train_loss,train_error_top1,test_loss,test_error_top1,test_error_topk,lr,p,wall_time_seconds
//! ```
//!
//! `epoch` counts completed epochs (1-based). The schedules are queried with
//! the 0-based index of the epoch being trained, so row `e` was trained with
//! `lr_at(e - 1)`. `p` is the adaptivity actually applied: Padam's scheduled
//! value, 0.5 for Adam/Amsgrad, 0 for SGD.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{self, BatchPlan, Dataset, DelimitedOptions};
use crate::error::{Error, Result};
use crate::model::{self, ModelKind, ModelParams, ModelSpec};
use crate::optim::{check_p, HyperParamOverrides, HyperParams, Optimizer, OptimizerKind, OptimizerState};
use crate::schedule::{scaled_milestones, PSchedule, StepDecaySchedule};

pub const DEFAULT_EPOCHS: usize = 60;
pub const DEFAULT_SWEEP_EPOCHS: usize = 30;
pub const DEFAULT_P_GRID: [f64; 3] = [0.25, 0.125, 0.0625];
pub const DEFAULT_LR_GRID: [f64; 3] = [0.1, 0.01, 0.001];

pub const METRICS_FILE: &str = "metrics.csv";
pub const CONFIG_FILE: &str = "config.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LrScheduleConfig {
    /// Falls back to the optimizer's `alpha0`.
    pub base: Option<f64>,
    pub factor: f64,
    /// Falls back to 1/4, 1/2 and 3/4 of the epoch budget.
    pub milestones: Option<Vec<usize>>,
}

impl Default for LrScheduleConfig {
    fn default() -> Self {
        Self {
            base: None,
            factor: 0.1,
            milestones: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub hidden_dim: Option<usize>,
    pub init_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Mlp,
            hidden_dim: Some(16),
            init_scale: 1.5,
        }
    }
}

fn default_delimiter() -> char {
    ','
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    Blobs {
        num_classes: usize,
        per_class: usize,
        dim: usize,
        separation: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    TwoMoons {
        n: usize,
        noise: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    File {
        path: PathBuf,
        #[serde(default = "default_delimiter")]
        delimiter: char,
        #[serde(default)]
        label_column: Option<usize>,
        #[serde(default)]
        skip_header: bool,
    },
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::TwoMoons {
            n: 1000,
            noise: 0.1,
            seed: None,
        }
    }
}

impl DatasetSpec {
    fn validate(&self) -> Result<()> {
        match self {
            DatasetSpec::Blobs {
                num_classes,
                per_class,
                dim,
                separation,
                ..
            } => {
                if *num_classes < 2 || *per_class < 1 || *dim < 1 {
                    return Err(Error::config("blobs need num_classes >= 2, per_class >= 1, dim >= 1"));
                }
                if separation.is_nan() || *separation < 0.0 {
                    return Err(Error::config("blobs separation must be >= 0"));
                }
            }
            DatasetSpec::TwoMoons { n, noise, .. } => {
                if *n < 2 || noise.is_nan() || *noise < 0.0 {
                    return Err(Error::config("two_moons needs n >= 2 and noise >= 0"));
                }
            }
            DatasetSpec::File { delimiter, .. } => {
                if !delimiter.is_ascii() {
                    return Err(Error::config("delimiter must be a single ASCII character"));
                }
            }
        }
        Ok(())
    }

    pub fn load(&self, default_seed: u64) -> Result<Dataset> {
        match self {
            DatasetSpec::Blobs {
                num_classes,
                per_class,
                dim,
                separation,
                seed,
            } => data::make_blobs(*num_classes, *per_class, *dim, *separation, seed.unwrap_or(default_seed)),
            DatasetSpec::TwoMoons { n, noise, seed } => {
                data::make_two_moons(*n, *noise, seed.unwrap_or(default_seed))
            }
            DatasetSpec::File {
                path,
                delimiter,
                label_column,
                skip_header,
            } => data::load_delimited(
                path,
                &DelimitedOptions {
                    delimiter: *delimiter as u8,
                    label_column: *label_column,
                    skip_header: *skip_header,
                },
            ),
        }
    }
}

/// One experiment, fully described. Unset optional fields resolve to the
/// optimizer presets and harness defaults; see [`TrialConfig::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    pub optimizer: String,
    pub hyper: HyperParamOverrides,
    pub lr_schedule: LrScheduleConfig,
    /// Falls back to a constant schedule at the resolved `p`.
    pub p_schedule: Option<PSchedule>,
    pub model: ModelConfig,
    pub dataset: DatasetSpec,
    pub test_fraction: f64,
    /// Falls back to 60 for single runs and 30 for the learning-rate sweep.
    pub epochs: Option<usize>,
    pub batch_size: usize,
    pub drop_last: bool,
    pub seed: u64,
    /// Second error column's `k`; falls back to `min(5, num_classes)`.
    pub topk: Option<usize>,
    /// A mean batch loss above this (or any non-finite loss) aborts the run.
    pub divergence_threshold: f64,
    pub output_dir: PathBuf,
    pub run_id: Option<String>,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            optimizer: "padam".into(),
            hyper: HyperParamOverrides::default(),
            lr_schedule: LrScheduleConfig::default(),
            p_schedule: None,
            model: ModelConfig::default(),
            dataset: DatasetSpec::default(),
            test_fraction: 0.2,
            epochs: None,
            batch_size: 64,
            drop_last: false,
            seed: 42,
            topk: None,
            divergence_threshold: 1e4,
            output_dir: PathBuf::from("runs"),
            run_id: None,
        }
    }
}

/// Everything a run needs, with every default filled in. Written to
/// `config.json` next to the metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedTrial {
    pub run_id: String,
    pub optimizer: OptimizerKind,
    pub hyper: HyperParams,
    pub lr_schedule: StepDecaySchedule,
    pub p_schedule: PSchedule,
    pub model: ModelConfig,
    pub dataset: DatasetSpec,
    pub test_fraction: f64,
    pub epochs: usize,
    pub batch: BatchPlan,
    pub seed: u64,
    pub data_seed: u64,
    pub split_seed: u64,
    pub init_seed: u64,
    pub topk: Option<usize>,
    pub divergence_threshold: f64,
    pub output_dir: PathBuf,
}

impl TrialConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn epochs_or(&self, default: usize) -> usize {
        self.epochs.unwrap_or(default)
    }

    /// Validate and fill defaults. Touches no data and writes nothing.
    pub fn resolve(&self) -> Result<ResolvedTrial> {
        let kind: OptimizerKind = self.optimizer.parse()?;
        let mut hyper = self.hyper.resolve(kind);
        if let (OptimizerKind::Padam, Some(ps)) = (kind, &self.p_schedule) {
            // the schedule's starting point is the p the run starts with
            hyper.p = ps.p_start();
        }
        hyper.validate()?;

        let epochs = self.epochs_or(DEFAULT_EPOCHS);
        if epochs == 0 {
            return Err(Error::config("epochs must be >= 1"));
        }
        let lr_schedule = StepDecaySchedule {
            base: self.lr_schedule.base.unwrap_or(hyper.alpha0),
            factor: self.lr_schedule.factor,
            milestones: self
                .lr_schedule
                .milestones
                .clone()
                .unwrap_or_else(|| scaled_milestones(epochs)),
        };
        lr_schedule.validate()?;

        let p_schedule = match (&self.p_schedule, kind) {
            (Some(ps), OptimizerKind::Padam) => ps.clone(),
            _ => PSchedule::constant(hyper.p),
        };
        p_schedule.validate()?;

        if self.model.kind == ModelKind::Mlp && self.model.hidden_dim.unwrap_or(0) == 0 {
            return Err(Error::config("mlp needs hidden_dim >= 1"));
        }
        if !(self.model.init_scale >= 0.0 && self.model.init_scale.is_finite()) {
            return Err(Error::config("init_scale must be >= 0"));
        }
        self.dataset.validate()?;
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::config(format!(
                "test_fraction must be in (0, 1), got {}",
                self.test_fraction
            )));
        }
        let batch = BatchPlan {
            batch_size: self.batch_size,
            shuffle_seed: self.seed.wrapping_add(2),
            drop_last: self.drop_last,
        };
        batch.validate()?;
        if self.topk == Some(0) {
            return Err(Error::config("topk must be >= 1"));
        }
        if self.divergence_threshold.is_nan() || self.divergence_threshold <= 0.0 {
            return Err(Error::config("divergence_threshold must be > 0"));
        }
        let run_id = match &self.run_id {
            Some(id) => {
                check_run_id(id)?;
                id.clone()
            }
            None => format!("{kind}-seed{}", self.seed),
        };
        Ok(ResolvedTrial {
            run_id,
            optimizer: kind,
            hyper,
            lr_schedule,
            p_schedule,
            model: self.model.clone(),
            dataset: self.dataset.clone(),
            test_fraction: self.test_fraction,
            epochs,
            batch,
            seed: self.seed,
            data_seed: self.seed,
            split_seed: self.seed.wrapping_add(1),
            init_seed: self.seed.wrapping_add(3),
            topk: self.topk,
            divergence_threshold: self.divergence_threshold,
            output_dir: self.output_dir.clone(),
        })
    }
}

fn check_run_id(id: &str) -> Result<()> {
    if id.is_empty() || id.contains(['/', '\\']) || id == "." || id == ".." {
        return Err(Error::config(format!("run id `{id}` is not a plain directory name")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_error_top1: f64,
    pub test_loss: f64,
    pub test_error_top1: f64,
    pub test_error_topk: f64,
    pub lr: f64,
    pub p: f64,
    pub wall_time_seconds: f64,
}

impl MetricsRow {
    pub const METRICS: [&'static str; 8] = [
        "train_loss",
        "train_error_top1",
        "test_loss",
        "test_error_top1",
        "test_error_topk",
        "lr",
        "p",
        "wall_time_seconds",
    ];

    pub fn metric(&self, name: &str) -> Option<f64> {
        Some(match name {
            "train_loss" => self.train_loss,
            "train_error_top1" => self.train_error_top1,
            "test_loss" => self.test_loss,
            "test_error_top1" => self.test_error_top1,
            "test_error_topk" => self.test_error_topk,
            "lr" => self.lr,
            "p" => self.p,
            "wall_time_seconds" => self.wall_time_seconds,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum TrialStatus {
    Completed,
    /// `epoch` is the 1-based epoch being trained; `batch` is absent when the
    /// blow-up showed in evaluation rather than in a training batch.
    Diverged { epoch: usize, batch: Option<usize> },
}

#[derive(Debug, Clone)]
pub struct TrialReport {
    pub run_id: String,
    pub run_dir: PathBuf,
    pub metrics_path: PathBuf,
    pub rows: Vec<MetricsRow>,
    pub status: TrialStatus,
    pub final_params: ModelParams,
}

struct Prepared {
    train: Dataset,
    test: Dataset,
    spec: ModelSpec,
    topk: usize,
}

fn prepare(r: &ResolvedTrial) -> Result<Prepared> {
    let raw = r.dataset.load(r.data_seed)?;
    let (train, test) = data::split(&raw, r.test_fraction, r.split_seed)?;
    let (mean, std) = train.feature_stats();
    let train = train.standardized(&mean, &std)?;
    let test = test.standardized(&mean, &std)?;
    let spec = ModelSpec {
        kind: r.model.kind,
        input_dim: raw.dim(),
        hidden_dim: match r.model.kind {
            ModelKind::Mlp => r.model.hidden_dim,
            ModelKind::Logreg => None,
        },
        num_classes: raw.num_classes,
        init_seed: r.init_seed,
        init_scale: r.model.init_scale,
    };
    spec.validate()?;
    let topk = r.topk.unwrap_or(5.min(raw.num_classes));
    if topk > raw.num_classes {
        return Err(Error::config(format!(
            "topk {topk} exceeds the {} classes in the data",
            raw.num_classes
        )));
    }
    Ok(Prepared {
        train,
        test,
        spec,
        topk,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// Train one configuration to completion or divergence. Divergence is
/// reported in the returned status; use [`run_trial`] to get it as an error.
pub fn execute_trial(config: &TrialConfig) -> Result<TrialReport> {
    let r = config.resolve()?;
    execute_resolved(&r)
}

fn execute_resolved(r: &ResolvedTrial) -> Result<TrialReport> {
    let prep = prepare(r)?;
    let run_dir = r.output_dir.join(&r.run_id);
    fs::create_dir_all(&run_dir)?;
    write_json(&run_dir.join(CONFIG_FILE), r)?;
    let metrics_path = run_dir.join(METRICS_FILE);
    let mut writer = csv::Writer::from_path(&metrics_path)?;

    let optimizer = Optimizer::new(r.optimizer, r.hyper)?;
    let mut params = model::init_params(&prep.spec)?;
    let mut states: Vec<OptimizerState> = params
        .blocks()
        .iter()
        .map(|b| optimizer.init_state(b.value.shape()))
        .collect::<Result<_>>()?;
    let ks = [1, prep.topk];
    let started = Instant::now();
    let mut rows = Vec::with_capacity(r.epochs);
    let mut status = TrialStatus::Completed;

    'epochs: for e in 0..r.epochs {
        let epoch = e + 1;
        let lr = r.lr_schedule.lr_at(e);
        let step_opt = match r.optimizer {
            OptimizerKind::Padam => optimizer.with_p(r.p_schedule.p_at(e))?,
            _ => optimizer,
        };

        let mut loss_sum = 0.0;
        let mut n_batches = 0usize;
        for (bi, batch) in data::batches(&prep.train, &r.batch, e)?.into_iter().enumerate() {
            let (loss, grads) = model::loss_and_grads(&params, &batch.x, &batch.labels)?;
            if !loss.is_finite() || loss > r.divergence_threshold {
                status = TrialStatus::Diverged {
                    epoch,
                    batch: Some(bi),
                };
                break 'epochs;
            }
            let mut next_values = Vec::with_capacity(states.len());
            for ((block, grad), state) in params.blocks().iter().zip(grads.blocks()).zip(states.iter_mut()) {
                let (value, next) = match step_opt.step_named(&block.name, &block.value, &grad.value, state, lr) {
                    Ok(out) => out,
                    Err(Error::NonFiniteInput { .. }) => {
                        status = TrialStatus::Diverged {
                            epoch,
                            batch: Some(bi),
                        };
                        break 'epochs;
                    }
                    Err(other) => return Err(other),
                };
                next_values.push(value);
                *state = next;
            }
            params = params.with_values(next_values)?;
            loss_sum += loss;
            n_batches += 1;
        }
        if n_batches == 0 {
            return Err(Error::config("batch plan produced no batches (drop_last with batch_size > n)"));
        }

        let train_eval = model::evaluate(&params, &prep.train.x, &prep.train.labels, &[1])?;
        let test_eval = model::evaluate(&params, &prep.test.x, &prep.test.labels, &ks)?;
        if !params.is_finite() || !test_eval.loss.is_finite() || !train_eval.loss.is_finite() {
            status = TrialStatus::Diverged { epoch, batch: None };
            break;
        }
        let row = MetricsRow {
            epoch,
            train_loss: loss_sum / n_batches as f64,
            train_error_top1: train_eval.errors[0].1,
            test_loss: test_eval.loss,
            test_error_top1: test_eval.errors[0].1,
            test_error_topk: test_eval.errors[1].1,
            lr,
            p: step_opt.effective_p(),
            wall_time_seconds: started.elapsed().as_secs_f64(),
        };
        writer.serialize(&row)?;
        writer.flush()?;
        rows.push(row);
    }
    writer.flush()?;

    Ok(TrialReport {
        run_id: r.run_id.clone(),
        run_dir,
        metrics_path,
        rows,
        status,
        final_params: params,
    })
}

/// [`execute_trial`], with divergence surfaced as [`Error::Diverged`].
pub fn run_trial(config: &TrialConfig) -> Result<TrialReport> {
    let report = execute_trial(config)?;
    match report.status {
        TrialStatus::Completed => Ok(report),
        TrialStatus::Diverged { epoch, batch } => Err(Error::Diverged { epoch, batch }),
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellState {
    Completed,
    Diverged,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub id: String,
    pub coords: BTreeMap<String, serde_json::Value>,
    pub state: CellState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diverged: Option<TrialStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub epochs_completed: usize,
    pub final_row: Option<MetricsRow>,
    pub metrics_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRow {
    pub optimizer: String,
    /// Top-1 test accuracy at each checkpoint; `None` if the run never got there.
    pub test_accuracy: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointTable {
    pub checkpoints: Vec<usize>,
    pub rows: Vec<CheckpointRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub sweep: String,
    pub output_dir: PathBuf,
    pub cells: Vec<SweepCell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_table: Option<CheckpointTable>,
}

impl SweepResult {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn cell(&self, id: &str) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.id == id)
    }

    /// Plain-text table of final metrics per cell.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<24} {:>10} {:>12} {:>12} {:>8}\n",
            "cell", "state", "train_loss", "test_err@1", "epochs"
        );
        for c in &self.cells {
            let (tl, te) = c
                .final_row
                .as_ref()
                .map(|r| (format!("{:.6}", r.train_loss), format!("{:.4}", r.test_error_top1)))
                .unwrap_or_else(|| ("-".into(), "-".into()));
            let state = match c.state {
                CellState::Completed => "ok",
                CellState::Diverged => "diverged",
                CellState::Failed => "failed",
            };
            out.push_str(&format!(
                "{:<24} {:>10} {:>12} {:>12} {:>8}\n",
                c.id, state, tl, te, c.epochs_completed
            ));
        }
        if let Some(t) = &self.checkpoint_table {
            out.push('\n');
            out.push_str(&format!("{:<10}", "optimizer"));
            for c in &t.checkpoints {
                out.push_str(&format!(" {:>10}", format!("ep{c}")));
            }
            out.push('\n');
            for row in &t.rows {
                out.push_str(&format!("{:<10}", row.optimizer));
                for a in &row.test_accuracy {
                    let cell = a.map(|v| format!("{:.2}%", 100.0 * v)).unwrap_or_else(|| "-".into());
                    out.push_str(&format!(" {cell:>10}"));
                }
                out.push('\n');
            }
        }
        out
    }
}

struct CellPlan {
    id: String,
    coords: BTreeMap<String, serde_json::Value>,
    config: TrialConfig,
}

fn fmt_value(v: f64) -> String {
    format!("{v}")
}

fn run_cells(sweep: &str, output_dir: &Path, plans: Vec<CellPlan>) -> Result<SweepResult> {
    // resolve everything first so a bad grid fails before any training starts
    let resolved: Vec<ResolvedTrial> = plans.iter().map(|p| p.config.resolve()).collect::<Result<_>>()?;
    fs::create_dir_all(output_dir)?;

    let cells: Vec<SweepCell> = plans
        .into_par_iter()
        .zip(resolved.into_par_iter())
        .map(|(plan, r)| match execute_resolved(&r) {
            Ok(rep) => {
                let (state, diverged) = match rep.status {
                    TrialStatus::Completed => (CellState::Completed, None),
                    s @ TrialStatus::Diverged { .. } => (CellState::Diverged, Some(s)),
                };
                SweepCell {
                    id: plan.id,
                    coords: plan.coords,
                    state,
                    diverged,
                    error: None,
                    epochs_completed: rep.rows.len(),
                    final_row: rep.rows.last().cloned(),
                    metrics_path: Some(rep.metrics_path),
                }
            }
            Err(e) => {
                let metrics = r.output_dir.join(&r.run_id).join(METRICS_FILE);
                SweepCell {
                    id: plan.id,
                    coords: plan.coords,
                    state: CellState::Failed,
                    diverged: None,
                    error: Some(e.to_string()),
                    epochs_completed: 0,
                    final_row: None,
                    metrics_path: metrics.exists().then_some(metrics),
                }
            }
        })
        .collect();

    let result = SweepResult {
        sweep: sweep.to_owned(),
        output_dir: output_dir.to_owned(),
        cells,
        checkpoint_table: None,
    };
    write_json(&output_dir.join(SUMMARY_FILE), &result)?;
    Ok(result)
}

fn check_p_grid(p_values: &[f64]) -> Result<()> {
    if p_values.is_empty() {
        return Err(Error::config("p grid is empty"));
    }
    for &p in p_values {
        check_p(p).map_err(|_| Error::config(format!("p value {p} outside [0, 0.5]")))?;
    }
    Ok(())
}

fn check_unique<T: PartialEq + std::fmt::Debug>(what: &str, values: &[T]) -> Result<()> {
    for (i, v) in values.iter().enumerate() {
        if values[..i].contains(v) {
            return Err(Error::config(format!("duplicate {what} {v:?}")));
        }
    }
    Ok(())
}

fn cell_config(base: &TrialConfig, id: &str) -> TrialConfig {
    TrialConfig {
        run_id: Some(id.to_owned()),
        ..base.clone()
    }
}

/// One Padam run per `p` (constant), everything else shared with `base`.
pub fn grid_search_p(base: &TrialConfig, p_values: &[f64]) -> Result<SweepResult> {
    let kind: OptimizerKind = base.optimizer.parse()?;
    if kind != OptimizerKind::Padam {
        return Err(Error::config(format!("p grid needs the padam optimizer, got {kind}")));
    }
    check_p_grid(p_values)?;
    check_unique("p value", p_values)?;
    let plans = p_values
        .iter()
        .map(|&p| {
            let id = format!("p{}", fmt_value(p));
            let mut config = cell_config(base, &id);
            config.hyper.p = Some(p);
            config.p_schedule = None;
            CellPlan {
                coords: BTreeMap::from([("p".into(), p.into())]),
                id,
                config,
            }
        })
        .collect();
    run_cells("grid-p", &base.output_dir, plans)
}

/// Cartesian product of constant `p` and base learning rate. Epochs default
/// to 30. Also writes `lr_sensitivity_p<p>.csv` per `p` with the final metrics
/// across learning rates.
pub fn lr_sensitivity_sweep(base: &TrialConfig, p_values: &[f64], lr_values: &[f64]) -> Result<SweepResult> {
    let kind: OptimizerKind = base.optimizer.parse()?;
    if kind != OptimizerKind::Padam {
        return Err(Error::config(format!("lr sweep needs the padam optimizer, got {kind}")));
    }
    check_p_grid(p_values)?;
    check_unique("p value", p_values)?;
    if lr_values.is_empty() {
        return Err(Error::config("learning-rate grid is empty"));
    }
    check_unique("learning rate", lr_values)?;
    if let Some(lr) = lr_values.iter().find(|&&lr| !(lr > 0.0 && lr.is_finite())) {
        return Err(Error::config(format!("learning rate {lr} must be > 0")));
    }
    let epochs = base.epochs_or(DEFAULT_SWEEP_EPOCHS);
    let mut plans = Vec::new();
    for &p in p_values {
        for &lr in lr_values {
            let id = format!("p{}-lr{}", fmt_value(p), fmt_value(lr));
            let mut config = cell_config(base, &id);
            config.epochs = Some(epochs);
            config.hyper.p = Some(p);
            config.p_schedule = None;
            config.lr_schedule.base = Some(lr);
            plans.push(CellPlan {
                coords: BTreeMap::from([("p".into(), p.into()), ("lr".into(), lr.into())]),
                id,
                config,
            });
        }
    }
    let result = run_cells("sweep-lr", &base.output_dir, plans)?;
    write_lr_series(&result, p_values, lr_values)?;
    Ok(result)
}

fn write_lr_series(result: &SweepResult, p_values: &[f64], lr_values: &[f64]) -> Result<()> {
    for &p in p_values {
        let path = result.output_dir.join(format!("lr_sensitivity_p{}.csv", fmt_value(p)));
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "lr,state,final_train_loss,final_test_error_top1")?;
        for &lr in lr_values {
            let id = format!("p{}-lr{}", fmt_value(p), fmt_value(lr));
            let Some(cell) = result.cell(&id) else { continue };
            let state = serde_json::to_value(cell.state)?;
            let state = state.as_str().unwrap_or_default();
            match &cell.final_row {
                Some(r) => writeln!(w, "{lr},{state},{},{}", r.train_loss, r.test_error_top1)?,
                None => writeln!(w, "{lr},{state},,")?,
            }
        }
        w.flush()?;
    }
    Ok(())
}

/// Checkpoints at 1/4, 1/2, 3/4 and all of the epoch budget.
pub fn default_checkpoints(epochs: usize) -> Vec<usize> {
    let mut c = scaled_milestones(epochs);
    c.push(epochs);
    c
}

/// One run per optimizer, each on its own presets (shared `hyper` overrides
/// still apply). The learning-rate base always comes from each optimizer's
/// `alpha0`; the milestones come from `base`.
pub fn compare_optimizers(base: &TrialConfig, names: &[String], checkpoints: &[usize]) -> Result<SweepResult> {
    if names.is_empty() {
        return Err(Error::config("no optimizers to compare"));
    }
    let kinds: Vec<OptimizerKind> = names.iter().map(|n| n.parse()).collect::<Result<_>>()?;
    check_unique("optimizer", &kinds)?;
    let epochs = base.epochs_or(DEFAULT_EPOCHS);
    if checkpoints.is_empty() {
        return Err(Error::config("no checkpoint epochs"));
    }
    if let Some(c) = checkpoints.iter().find(|&&c| c == 0 || c > epochs) {
        return Err(Error::config(format!("checkpoint {c} outside 1..={epochs}")));
    }
    let plans = kinds
        .iter()
        .map(|&kind| {
            let id = kind.to_string();
            let mut config = cell_config(base, &id);
            config.optimizer = id.clone();
            config.lr_schedule.base = None;
            if kind != OptimizerKind::Padam {
                config.p_schedule = None;
            }
            CellPlan {
                coords: BTreeMap::from([("optimizer".into(), id.clone().into())]),
                id,
                config,
            }
        })
        .collect();
    let mut result = run_cells("compare", &base.output_dir, plans)?;

    let mut rows = Vec::new();
    for cell in &result.cells {
        let metrics = match &cell.metrics_path {
            Some(p) => read_metrics(p)?,
            None => Vec::new(),
        };
        let test_accuracy = checkpoints
            .iter()
            .map(|&c| metrics.iter().find(|r| r.epoch == c).map(|r| 1.0 - r.test_error_top1))
            .collect();
        rows.push(CheckpointRow {
            optimizer: cell.id.clone(),
            test_accuracy,
        });
    }
    result.checkpoint_table = Some(CheckpointTable {
        checkpoints: checkpoints.to_vec(),
        rows,
    });
    write_json(&result.output_dir.join(SUMMARY_FILE), &result)?;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub cell: String,
    pub coords: BTreeMap<String, serde_json::Value>,
    pub state: CellState,
    /// Set when the run stopped early; the series ends at the last completed epoch.
    pub truncated: bool,
    pub points: usize,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesIndex {
    pub metric: String,
    pub series: Vec<SeriesEntry>,
}

/// Writes `<out_dir>/<cell>.<metric>.tsv` (two columns: epoch, value) for
/// every cell that produced metrics, plus `<out_dir>/<metric>.index.json`.
pub fn emit_plot_series(sweep: &SweepResult, metric: &str, out_dir: &Path) -> Result<SeriesIndex> {
    if !MetricsRow::METRICS.contains(&metric) {
        return Err(Error::invalid(format!(
            "unknown metric `{metric}` (valid: {})",
            MetricsRow::METRICS.join(", ")
        )));
    }
    fs::create_dir_all(out_dir)?;
    let mut series = Vec::with_capacity(sweep.cells.len());
    for cell in &sweep.cells {
        let rows = match &cell.metrics_path {
            Some(p) if p.exists() => Some(read_metrics(p)?),
            _ => None,
        };
        let (file, points) = match rows {
            Some(rows) => {
                let path = out_dir.join(format!("{}.{metric}.tsv", cell.id));
                let mut w = BufWriter::new(File::create(&path)?);
                for r in &rows {
                    let v = r.metric(metric).expect("metric name validated above");
                    writeln!(w, "{}\t{v}", r.epoch)?;
                }
                w.flush()?;
                (Some(path), rows.len())
            }
            None => (None, 0),
        };
        series.push(SeriesEntry {
            cell: cell.id.clone(),
            coords: cell.coords.clone(),
            state: cell.state,
            truncated: cell.state != CellState::Completed,
            points,
            file,
        });
    }
    let index = SeriesIndex {
        metric: metric.to_owned(),
        series,
    };
    write_json(&out_dir.join(format!("{metric}.index.json")), &index)?;
    Ok(index)
}
