//! `train` and `infer`.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use ciber::bnn::collapse;
use ciber::inference::{argmax, run_classification, run_regression, Baselines};
use ciber::mlp::{Head, LayerChoice, MlpSpec};
use ciber::posterior::{layer_params, select_collapsed, train_and_collect, Dataset, Normalizer, TrajectoryConfig};

use crate::{Budgets, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HeadKind {
    /// Mean and log-variance outputs.
    Regression,
    /// Mean output with a fixed noise variance.
    Homoscedastic,
    /// One logit per class.
    Classification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Layer {
    Last,
    SecondToLast,
}

impl From<Layer> for LayerChoice {
    fn from(l: Layer) -> Self {
        match l {
            Layer::Last => LayerChoice::Last,
            Layer::SecondToLast => LayerChoice::SecondToLast,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training CSV with a header row.
    data: PathBuf,
    /// Target column; defaults to the last one.
    #[arg(long)]
    target: Option<String>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "50")]
    hidden: Vec<usize>,
    #[arg(long, value_enum, default_value_t = HeadKind::Regression)]
    head: HeadKind,
    /// Noise variance of the homoscedastic head.
    #[arg(long, default_value_t = 1.0)]
    noise_variance: f64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    collect_learning_rate: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Number of trajectory samples to keep.
    #[arg(long)]
    samples: Option<usize>,
    /// Epochs between snapshots.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    /// First epoch at which early stopping may trigger.
    #[arg(long)]
    collect_start: Option<usize>,
    #[arg(long)]
    validation_fraction: Option<f64>,
    /// Relative validation-loss band a snapshot must stay within.
    #[arg(long)]
    band: Option<f64>,
    /// Output bundle.
    #[arg(long, short, default_value = "samples.json")]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Test CSV with the training target column.
    data: PathBuf,
    /// Bundle written by `train`.
    samples: PathBuf,
    #[arg(long, value_enum, default_value_t = Layer::Last)]
    layer: Layer,
    /// Collapse the k weights of highest sample variance; the whole layer
    /// (biases included) when omitted.
    #[arg(long)]
    k: Option<usize>,
    /// Must agree with the network head when given.
    #[arg(long, value_enum)]
    task: Option<Task>,
    /// Widen the posterior box by this fraction of its width on each side.
    #[arg(long, default_value_t = 0.0)]
    padding: f64,
    /// Use only the first rows of the test set.
    #[arg(long)]
    limit: Option<usize>,
    /// Process rows one at a time.
    #[arg(long)]
    serial: bool,
    #[command(flatten)]
    budgets: Budgets,
    /// Report JSON; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Metrics CSV.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Per-row CSV.
    #[arg(long)]
    rows: Option<PathBuf>,
}

/// Everything `infer` needs from a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBundle {
    pub mlp: MlpSpec,
    pub target: Option<String>,
    pub normalizer: Normalizer,
    pub best: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
    pub best_validation_loss: f64,
    pub sample_validation_losses: Vec<f64>,
    pub epochs_trained: usize,
    /// Accuracy of the plug-in network on the training set (classification).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_accuracy: Option<f64>,
}

fn read_csv(path: &Path, target: Option<&str>) -> Result<Dataset> {
    Dataset::from_csv(path, target).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn train(args: &TrainArgs, seed: u64) -> Result<()> {
    let ds = read_csv(&args.data, args.target.as_deref())?;
    let (head, outputs) = match args.head {
        HeadKind::Regression => (Head::Regression, 2),
        HeadKind::Homoscedastic => (
            Head::Homoscedastic {
                variance: args.noise_variance,
            },
            1,
        ),
        HeadKind::Classification => (Head::Classification, ds.classes()?.max(2)),
    };
    let mut widths = vec![ds.features()];
    widths.extend(&args.hidden);
    widths.push(outputs);
    let mlp = MlpSpec::new(widths, head)?;
    let d = TrajectoryConfig::default();
    let cfg = TrajectoryConfig {
        epochs: args.epochs.unwrap_or(d.epochs),
        learning_rate: args.learning_rate.unwrap_or(d.learning_rate),
        collect_learning_rate: args.collect_learning_rate.unwrap_or(d.collect_learning_rate),
        weight_decay: args.weight_decay.unwrap_or(d.weight_decay),
        batch_size: args.batch_size.unwrap_or(d.batch_size),
        samples: args.samples.unwrap_or(d.samples),
        stride: args.stride.unwrap_or(d.stride),
        patience: args.patience.unwrap_or(d.patience),
        collect_start: args.collect_start.unwrap_or(d.collect_start),
        validation_fraction: args.validation_fraction.unwrap_or(d.validation_fraction),
        band: args.band.unwrap_or(d.band),
        seed,
    };
    let normalizer = Normalizer::fit(&ds, !matches!(head, Head::Classification));
    let scaled = normalizer.apply(&ds);
    let out = train_and_collect(&scaled, &mlp, &cfg)?;
    let train_accuracy = matches!(head, Head::Classification).then(|| {
        let hits = scaled
            .x
            .iter()
            .zip(&scaled.y)
            .filter(|(x, &y)| argmax(&mlp.forward(&out.best, x)) == y as usize)
            .count();
        hits as f64 / scaled.len() as f64
    });
    let bundle = SampleBundle {
        mlp,
        target: args.target.clone(),
        normalizer,
        best: out.best,
        samples: out.samples,
        best_validation_loss: out.best_validation_loss,
        sample_validation_losses: out.sample_validation_losses,
        epochs_trained: out.epochs_trained,
        train_accuracy,
    };
    write(&args.out, &serde_json::to_string_pretty(&bundle)?)?;
    println!("epochs trained   {}", bundle.epochs_trained);
    println!("validation loss  {:.6}", bundle.best_validation_loss);
    println!("samples          {}", bundle.samples.len());
    if let Some(a) = bundle.train_accuracy {
        println!("train accuracy   {:.2}%", 100.0 * a);
    }
    println!("wrote            {}", args.out.display());
    Ok(())
}

pub fn infer(args: &InferArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.samples).with_context(|| format!("reading {}", args.samples.display()))?;
    let bundle: SampleBundle =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.samples.display()))?;
    bundle.mlp.validate()?;
    anyhow::ensure!(!bundle.samples.is_empty(), "the bundle holds no samples");
    let mut test = read_csv(&args.data, bundle.target.as_deref())?;
    if let Some(n) = args.limit {
        test = test.subset(&(0..test.len().min(n)).collect::<Vec<_>>());
    }
    anyhow::ensure!(
        test.features() == bundle.mlp.inputs(),
        "network expects {} features, {} has {}",
        bundle.mlp.inputs(),
        args.data.display(),
        test.features()
    );
    let classification = matches!(bundle.mlp.head, Head::Classification);
    if let Some(task) = args.task {
        anyhow::ensure!(
            (task == Task::Classification) == classification,
            "--task {task:?} does not match the network head"
        );
    }
    let layer = LayerChoice::from(args.layer);
    let idx = match args.k {
        Some(k) => select_collapsed(&bundle.samples, &bundle.mlp, layer, k)?,
        None => layer_params(&bundle.mlp, layer)?,
    };
    let samples = collapse(&bundle.samples, &idx, args.padding)?;
    let mut opts = args.budgets.options()?;
    opts.parallel = !args.serial;
    let baselines = Baselines {
        plug_in: Some(&bundle.best),
        mixture: &bundle.samples,
    };
    let report = if classification {
        run_classification(&bundle.mlp, &test, &bundle.normalizer, &samples, &baselines, &opts)?
    } else {
        run_regression(&bundle.mlp, &test, &bundle.normalizer, &samples, &baselines, &opts)?
    };
    match &args.out {
        Some(path) => write(path, &report.to_json())?,
        None => println!("{}", report.to_json()),
    }
    if let Some(path) = &args.metrics {
        write(path, &report.metrics_csv()?)?;
    }
    if let Some(path) = &args.rows {
        write(path, &report.to_csv()?)?;
    }
    if args.out.is_some() {
        let m = &report.metrics;
        println!("nll       {:.6}", m.nll);
        if let Some(r) = m.rmse {
            println!("rmse      {r:.6}");
        }
        if let Some(a) = m.accuracy {
            println!("accuracy  {a:.6}");
        }
        if m.floored > 0 {
            println!("floored   {} likelihoods clipped at {:e}", m.floored, opts.floor);
        }
    }
    Ok(())
}
