//! Datasets, the SGD trainer that collects weight samples from the
//! post-convergence trajectory, and selection of the collapsed weights.

use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{CiberError, Result};
use crate::mlp::{Head, LayerChoice, MlpSpec, Param, Target};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub names: Vec<String>,
    pub x: Vec<Vec<f64>>,
    /// Real targets, or class labels stored as small integers.
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(names: Vec<String>, x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        let ds = Dataset { names, x, y };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        if self.x.len() != self.y.len() {
            return Err(CiberError::Data("feature and target counts differ".into()));
        }
        let width = self.x.first().map_or(0, Vec::len);
        for (i, row) in self.x.iter().enumerate() {
            if row.len() != width {
                return Err(CiberError::Data(format!("row {} has {} features, expected {width}", i + 1, row.len())));
            }
            if row.iter().chain(std::iter::once(&self.y[i])).any(|v| !v.is_finite()) {
                return Err(CiberError::Data(format!("row {} has a non-finite value", i + 1)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn features(&self) -> usize {
        self.x.first().map_or(self.names.len(), Vec::len)
    }

    /// CSV with a header row. The target is the named column, or the last
    /// column when `target` is `None`.
    pub fn from_csv_reader(reader: impl Read, target: Option<&str>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.len() < 2 {
            return Err(CiberError::Data("need at least one feature column and a target column".into()));
        }
        let t = match target {
            Some(name) => header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| CiberError::Data(format!("no target column `{name}`")))?,
            None => header.len() - 1,
        };
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(CiberError::Data(format!(
                    "row {} has {} columns, header has {}",
                    i + 2,
                    rec.len(),
                    header.len()
                )));
            }
            let mut vals: Vec<f64> = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| CiberError::Data(format!("row {}: `{f}` is not a number", i + 2)))
                })
                .collect::<Result<_>>()?;
            y.push(vals.remove(t));
            x.push(vals);
        }
        let mut names = header;
        names.remove(t);
        Dataset::new(names, x, y)
    }

    pub fn from_csv(path: &Path, target: Option<&str>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?, target)
    }

    pub fn to_csv(&self, target: &str) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = self.names.clone();
        header.push(target.to_string());
        w.write_record(&header)?;
        for (row, y) in self.x.iter().zip(&self.y) {
            w.write_record(row.iter().chain(std::iter::once(y)).map(|v| v.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CiberError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            names: self.names.clone(),
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Shuffled split; the first part holds `fraction` of the rows.
    pub fn split(&self, fraction: f64, seed: u64) -> (Dataset, Dataset) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cut = ((self.len() as f64 * fraction).round() as usize).clamp(1, self.len().max(1));
        (self.subset(&idx[..cut]), self.subset(&idx[cut..]))
    }

    /// Number of classes when the targets are labels `0..k`.
    pub fn classes(&self) -> Result<usize> {
        let mut k = 0;
        for &y in &self.y {
            if y < 0.0 || y.fract() != 0.0 {
                return Err(CiberError::Data(format!("class label {y} is not a nonnegative integer")));
            }
            k = k.max(y as usize + 1);
        }
        Ok(k)
    }

    pub fn targets(&self, head: Head) -> Vec<Target> {
        self.y
            .iter()
            .map(|&y| match head {
                Head::Classification => Target::Class(y as usize),
                _ => Target::Real(y),
            })
            .collect()
    }
}

/// Per-column standardization fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub x_mean: Vec<f64>,
    pub x_std: Vec<f64>,
    pub y_mean: f64,
    pub y_std: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count().max(1) as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 0.0 { std } else { 1.0 })
}

impl Normalizer {
    /// Targets are standardized only when `scale_y` is set (regression).
    pub fn fit(ds: &Dataset, scale_y: bool) -> Self {
        let (mut x_mean, mut x_std) = (Vec::new(), Vec::new());
        for j in 0..ds.features() {
            let (m, s) = mean_std(ds.x.iter().map(move |r| r[j]));
            x_mean.push(m);
            x_std.push(s);
        }
        let (y_mean, y_std) = if scale_y { mean_std(ds.y.iter().copied()) } else { (0.0, 1.0) };
        Normalizer {
            x_mean,
            x_std,
            y_mean,
            y_std,
        }
    }

    pub fn features(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.x_mean.iter().zip(&self.x_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn apply(&self, ds: &Dataset) -> Dataset {
        Dataset {
            names: ds.names.clone(),
            x: ds.x.iter().map(|r| self.features(r)).collect(),
            y: ds.y.iter().map(|y| (y - self.y_mean) / self.y_std).collect(),
        }
    }
}

/// Friedman's first benchmark: ten uniform features, five of them relevant.
pub fn friedman1(n: usize, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(0.0)).expect("valid normal");
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let r: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
        let f = 10.0 * (std::f64::consts::PI * r[0] * r[1]).sin()
            + 20.0 * (r[2] - 0.5).powi(2)
            + 10.0 * r[3]
            + 5.0 * r[4];
        y.push(f + if noise > 0.0 { normal.sample(&mut rng) } else { 0.0 });
        x.push(r);
    }
    Dataset {
        names: (1..=10).map(|i| format!("x{i}")).collect(),
        x,
        y,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    /// Training epochs before collection, at most.
    pub epochs: usize,
    pub learning_rate: f64,
    /// Constant rate used while collecting samples.
    pub collect_learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    /// Early stopping is not checked before this epoch.
    pub collect_start: usize,
    /// Epochs between collected samples.
    pub stride: usize,
    pub samples: usize,
    pub patience: usize,
    pub validation_fraction: f64,
    /// Samples must reach a validation loss within `band · max(1, |best|)` of the best.
    pub band: f64,
    pub seed: u64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            epochs: 300,
            learning_rate: 0.01,
            collect_learning_rate: 0.005,
            weight_decay: 1e-4,
            batch_size: 32,
            collect_start: 20,
            stride: 1,
            samples: 10,
            patience: 30,
            validation_fraction: 0.1,
            band: 0.1,
            seed: 0,
        }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 || self.samples == 0 || self.batch_size == 0 {
            return Err(CiberError::Data("stride, samples and batch size must be positive".into()));
        }
        if self.collect_start >= self.epochs {
            return Err(CiberError::Data("collection must start before the last epoch".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(CiberError::Data("validation fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    /// Weight vectors from the post-convergence trajectory.
    pub samples: Vec<Vec<f64>>,
    /// Early-stopping checkpoint, the plug-in network.
    pub best: Vec<f64>,
    pub best_validation_loss: f64,
    pub sample_validation_losses: Vec<f64>,
    pub epochs_trained: usize,
}

/// He-uniform weights, zero biases.
pub fn init_params(mlp: &MlpSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..mlp.num_params())
        .map(|i| match mlp.locate(i) {
            Some(Param::Weight { layer, .. }) => {
                let limit = (6.0 / mlp.widths[layer] as f64).sqrt();
                rng.random_range(-limit..limit)
            }
            _ => 0.0,
        })
        .collect()
}

pub fn mean_loss(mlp: &MlpSpec, params: &[f64], x: &[Vec<f64>], t: &[Target]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().zip(t).map(|(x, &t)| mlp.loss(&mlp.forward(params, x), t)).sum::<f64>() / x.len() as f64
}

const GRAD_CLIP: f64 = 10.0;

fn epoch(
    mlp: &MlpSpec,
    params: &mut [f64],
    x: &[Vec<f64>],
    t: &[Target],
    lr: f64,
    cfg: &TrajectoryConfig,
    rng: &mut ChaCha8Rng,
    number: usize,
) -> Result<()> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.shuffle(rng);
    let mut grad = vec![0.0; params.len()];
    for batch in order.chunks(cfg.batch_size) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for &i in batch {
            loss += mlp.accumulate_grad(params, &x[i], t[i], &mut grad);
        }
        if !loss.is_finite() {
            return Err(CiberError::Divergence { epoch: number });
        }
        let scale = 1.0 / batch.len() as f64;
        let norm = grad.iter().map(|g| (g * scale).powi(2)).sum::<f64>().sqrt();
        let clip = if norm > GRAD_CLIP { GRAD_CLIP / norm } else { 1.0 };
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= lr * (g * scale * clip + cfg.weight_decay * *p);
        }
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(CiberError::Divergence { epoch: number });
    }
    Ok(())
}

/// Trains with early stopping, restores the best checkpoint, then keeps
/// running SGD at the collection rate and snapshots every `stride` epochs.
/// Snapshots outside the validation band are skipped; if none qualify the
/// checkpoint itself is returned.
pub fn train_and_collect(ds: &Dataset, mlp: &MlpSpec, cfg: &TrajectoryConfig) -> Result<TrainOutcome> {
    mlp.validate()?;
    cfg.validate()?;
    if ds.is_empty() {
        return Err(CiberError::Data("training set is empty".into()));
    }
    if ds.features() != mlp.inputs() {
        return Err(CiberError::Data(format!(
            "network expects {} features, data has {}",
            mlp.inputs(),
            ds.features()
        )));
    }
    if mlp.head == Head::Classification {
        let k = ds.classes()?;
        if k > mlp.outputs() {
            return Err(CiberError::Data(format!("{k} classes but {} logits", mlp.outputs())));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.shuffle(&mut rng);
    let n_val = ((ds.len() as f64) * cfg.validation_fraction).round() as usize;
    let n_val = if ds.len() > 1 { n_val.min(ds.len() - 1) } else { 0 };
    let (val_idx, train_idx) = idx.split_at(n_val);
    let train = ds.subset(train_idx);
    // without a validation split, the training loss drives early stopping
    let val = if n_val == 0 { train.clone() } else { ds.subset(val_idx) };
    let (tx, tt) = (&train.x, train.targets(mlp.head));
    let (vx, vt) = (&val.x, val.targets(mlp.head));

    let mut params = init_params(mlp, &mut rng);
    let mut best = params.clone();
    let mut best_loss = mean_loss(mlp, &params, vx, &vt);
    let mut since = 0;
    let mut epochs_trained = 0;
    for e in 1..=cfg.epochs {
        epoch(mlp, &mut params, tx, &tt, cfg.learning_rate, cfg, &mut rng, e)?;
        epochs_trained = e;
        let loss = mean_loss(mlp, &params, vx, &vt);
        if !loss.is_finite() {
            return Err(CiberError::Divergence { epoch: e });
        }
        if loss < best_loss {
            best_loss = loss;
            best = params.clone();
            since = 0;
        } else {
            since += 1;
        }
        if e >= cfg.collect_start && since >= cfg.patience {
            break;
        }
    }

    let tolerance = cfg.band * best_loss.abs().max(1.0);
    let mut params = best.clone();
    let mut samples = Vec::new();
    let mut losses = Vec::new();
    let budget = 3 * cfg.samples * cfg.stride;
    for e in 1..=budget {
        if samples.len() == cfg.samples {
            break;
        }
        epoch(mlp, &mut params, tx, &tt, cfg.collect_learning_rate, cfg, &mut rng, epochs_trained + e)?;
        if e % cfg.stride == 0 {
            let loss = mean_loss(mlp, &params, vx, &vt);
            if loss <= best_loss + tolerance {
                samples.push(params.clone());
                losses.push(loss);
            }
        }
    }
    if samples.is_empty() {
        samples.push(best.clone());
        losses.push(best_loss);
    }
    Ok(TrainOutcome {
        samples,
        best,
        best_validation_loss: best_loss,
        sample_validation_losses: losses,
        epochs_trained,
    })
}

/// Every parameter of the chosen layer, biases included.
pub fn layer_params(mlp: &MlpSpec, layer: LayerChoice) -> Result<Vec<usize>> {
    let l = mlp.layer_index(layer)?;
    let off = mlp.layer_offset(l);
    Ok((off..off + mlp.layer_size(l)).collect())
}

/// The `k` weights (biases excluded) of the chosen layer with the largest
/// sample variance, ties broken by ascending index.
pub fn select_collapsed(samples: &[Vec<f64>], mlp: &MlpSpec, layer: LayerChoice, k: usize) -> Result<Vec<usize>> {
    let l = mlp.layer_index(layer)?;
    let candidates: Vec<usize> = (0..mlp.widths[l + 1])
        .flat_map(|row| (0..mlp.widths[l]).map(move |col| (row, col)))
        .map(|(row, col)| mlp.weight_index(l, row, col))
        .collect();
    if k > candidates.len() {
        return Err(CiberError::Data(format!("cannot select {k} of {} weights", candidates.len())));
    }
    for s in samples {
        mlp.check_params(s)?;
    }
    let mut scored: Vec<(f64, usize)> = candidates
        .into_iter()
        .map(|i| {
            // sorted values make the sum independent of sample order
            let mut v: Vec<f64> = samples.iter().map(|s| s[i]).collect();
            v.sort_by(f64::total_cmp);
            (variance(&v), i)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<usize> = scored.into_iter().take(k).map(|(_, i)| i).collect();
    out.sort_unstable();
    Ok(out)
}

fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}
