use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use padam::harness::{
    self, compare_optimizers, default_checkpoints, emit_plot_series, grid_search_p, lr_sensitivity_sweep, run_trial,
    DatasetSpec, SweepResult, TrialConfig, DEFAULT_EPOCHS, DEFAULT_LR_GRID, DEFAULT_P_GRID,
};
use padam::model::ModelKind;
use padam::{Error, PSchedule};

#[derive(Parser)]
#[command(name = "padam", version, about = "Padam / Adam / Amsgrad / SGD experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single trial.
    Train(TrialArgs),
    /// One Padam run per p value.
    GridP {
        #[command(flatten)]
        trial: TrialArgs,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_P_GRID.to_vec())]
        p_values: Vec<f64>,
    },
    /// Cartesian sweep over p and base learning rate (30 epochs unless set).
    SweepLr {
        #[command(flatten)]
        trial: TrialArgs,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_P_GRID.to_vec())]
        p_values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LR_GRID.to_vec())]
        lr_values: Vec<f64>,
    },
    /// One run per optimizer on its preset hyperparameters.
    Compare {
        #[command(flatten)]
        trial: TrialArgs,
        #[arg(long, value_delimiter = ',', default_value = "padam,adam,amsgrad,sgd")]
        optimizers: Vec<String>,
        /// Epochs at which test accuracy is tabulated [default: quarters of the run].
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<usize>>,
    },
    /// Turn a sweep summary into per-cell (epoch, value) series.
    PlotData {
        /// Path to a sweep's summary.json.
        #[arg(long)]
        summary: PathBuf,
        #[arg(long, default_value = "train_loss")]
        metric: String,
        /// Defaults to `plots/` next to the summary.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Blobs,
    TwoMoons,
    File,
}

#[derive(Clone, Copy, ValueEnum)]
enum PModeArg {
    Constant,
    StepDecay,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Logreg,
    Mlp,
}

/// Every flag overrides the matching field of `--config` (or of the defaults).
#[derive(Args, Clone)]
struct TrialArgs {
    /// JSON trial configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    optimizer: Option<String>,

    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,

    #[arg(long)]
    lr_base: Option<f64>,
    #[arg(long)]
    lr_factor: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    lr_milestones: Option<Vec<usize>>,

    #[arg(long, value_enum)]
    p_mode: Option<PModeArg>,
    #[arg(long)]
    p_end: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    p_factor: f64,
    #[arg(long, value_delimiter = ',')]
    p_milestones: Option<Vec<usize>>,
    #[arg(long)]
    p_total_epochs: Option<usize>,

    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    init_scale: Option<f64>,

    #[arg(long, value_enum)]
    dataset: Option<DatasetArg>,
    #[arg(long, default_value_t = 2)]
    num_classes: usize,
    #[arg(long, default_value_t = 500)]
    per_class: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 10.0)]
    separation: f64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long)]
    data_path: Option<PathBuf>,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Label column index [default: last column].
    #[arg(long)]
    label_column: Option<usize>,
    #[arg(long)]
    skip_header: bool,

    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    drop_last: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    topk: Option<usize>,
    #[arg(long)]
    divergence_threshold: Option<f64>,
    #[arg(long)]
    outdir: Option<PathBuf>,
    #[arg(long)]
    run_id: Option<String>,
}

impl TrialArgs {
    fn build(&self) -> padam::Result<TrialConfig> {
        let mut c = match &self.config {
            Some(path) => TrialConfig::from_json_file(path)?,
            None => TrialConfig::default(),
        };
        if let Some(o) = &self.optimizer {
            c.optimizer = o.clone();
        }
        let h = &mut c.hyper;
        h.alpha0 = self.alpha0.or(h.alpha0);
        h.beta1 = self.beta1.or(h.beta1);
        h.beta2 = self.beta2.or(h.beta2);
        h.p = self.p.or(h.p);
        h.epsilon = self.epsilon.or(h.epsilon);
        h.weight_decay = self.weight_decay.or(h.weight_decay);
        h.momentum = self.momentum.or(h.momentum);

        if self.lr_base.is_some() {
            c.lr_schedule.base = self.lr_base;
        }
        if let Some(f) = self.lr_factor {
            c.lr_schedule.factor = f;
        }
        if let Some(m) = &self.lr_milestones {
            c.lr_schedule.milestones = Some(m.clone());
        }

        if let Some(mode) = self.p_mode {
            let kind = c.optimizer.parse().unwrap_or(padam::OptimizerKind::Padam);
            let p_start = c.hyper.resolve(kind).p;
            let p_end = self.p_end.unwrap_or(0.0);
            c.p_schedule = Some(match mode {
                PModeArg::Constant => PSchedule::constant(p_start),
                PModeArg::StepDecay => PSchedule::StepDecay {
                    p_start,
                    p_end,
                    factor: self.p_factor,
                    milestones: self.p_milestones.clone().unwrap_or_default(),
                },
                PModeArg::Linear => PSchedule::Linear {
                    p_start,
                    p_end,
                    total_epochs: self
                        .p_total_epochs
                        .or(self.epochs)
                        .or(c.epochs)
                        .unwrap_or(DEFAULT_EPOCHS),
                },
            });
        }

        if let Some(m) = self.model {
            c.model.kind = match m {
                ModelArg::Logreg => ModelKind::Logreg,
                ModelArg::Mlp => ModelKind::Mlp,
            };
        }
        if self.hidden_dim.is_some() {
            c.model.hidden_dim = self.hidden_dim;
        }
        if let Some(s) = self.init_scale {
            c.model.init_scale = s;
        }

        if let Some(d) = self.dataset {
            c.dataset = match d {
                DatasetArg::Blobs => DatasetSpec::Blobs {
                    num_classes: self.num_classes,
                    per_class: self.per_class,
                    dim: self.dim,
                    separation: self.separation,
                    seed: None,
                },
                DatasetArg::TwoMoons => DatasetSpec::TwoMoons {
                    n: self.n,
                    noise: self.noise,
                    seed: None,
                },
                DatasetArg::File => DatasetSpec::File {
                    path: self
                        .data_path
                        .clone()
                        .ok_or_else(|| Error::Config("--dataset file needs --data-path".into()))?,
                    delimiter: self.delimiter,
                    label_column: self.label_column,
                    skip_header: self.skip_header,
                },
            };
        }

        if let Some(f) = self.test_fraction {
            c.test_fraction = f;
        }
        if self.epochs.is_some() {
            c.epochs = self.epochs;
        }
        if let Some(b) = self.batch_size {
            c.batch_size = b;
        }
        c.drop_last |= self.drop_last;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if self.topk.is_some() {
            c.topk = self.topk;
        }
        if let Some(t) = self.divergence_threshold {
            c.divergence_threshold = t;
        }
        if let Some(o) = &self.outdir {
            c.output_dir = o.clone();
        }
        if self.run_id.is_some() {
            c.run_id = self.run_id.clone();
        }
        Ok(c)
    }
}

fn print_sweep(result: &SweepResult) {
    print!("{}", result.table());
    println!("summary: {}", result.output_dir.join(harness::SUMMARY_FILE).display());
}

fn run(cli: Cli) -> padam::Result<()> {
    match cli.command {
        Command::Train(args) => {
            let config = args.build()?;
            let report = run_trial(&config)?;
            if let Some(last) = report.rows.last() {
                println!(
                    "{}: {} epochs, train_loss {:.6}, test_error@1 {:.4}, test_error@k {:.4}",
                    report.run_id,
                    report.rows.len(),
                    last.train_loss,
                    last.test_error_top1,
                    last.test_error_topk
                );
            }
            println!("metrics: {}", report.metrics_path.display());
        }
        Command::GridP { trial, p_values } => {
            print_sweep(&grid_search_p(&trial.build()?, &p_values)?);
        }
        Command::SweepLr {
            trial,
            p_values,
            lr_values,
        } => {
            print_sweep(&lr_sensitivity_sweep(&trial.build()?, &p_values, &lr_values)?);
        }
        Command::Compare {
            trial,
            optimizers,
            checkpoints,
        } => {
            let config = trial.build()?;
            let checkpoints =
                checkpoints.unwrap_or_else(|| default_checkpoints(config.epochs_or(DEFAULT_EPOCHS)));
            print_sweep(&compare_optimizers(&config, &optimizers, &checkpoints)?);
        }
        Command::PlotData { summary, metric, out } => {
            let sweep = SweepResult::from_json_file(&summary)?;
            let out = out.unwrap_or_else(|| {
                summary
                    .parent()
                    .map(|p| p.join("plots"))
                    .unwrap_or_else(|| PathBuf::from("plots"))
            });
            let index = emit_plot_series(&sweep, &metric, &out)?;
            for s in &index.series {
                let flag = if s.truncated { " (truncated)" } else { "" };
                match &s.file {
                    Some(f) => println!("{}: {} points -> {}{flag}", s.cell, s.points, f.display()),
                    None => println!("{}: no metrics{flag}", s.cell),
                }
            }
            println!("index: {}", out.join(format!("{metric}.index.json")).display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Diverged { .. } => 3,
                ref e if e.is_validation() => 2,
                _ => 1,
            })
        }
    }
}
