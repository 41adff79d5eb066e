//! Collapsed Bayesian model averaging: per collapsed sample, exact WMI
//! queries over the encoded fragments; across samples, plain averages.

use std::collections::BTreeMap;

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wmi_core::rational::{from_f64, int};
use wmi_core::wmi::{Solver, SolverOptions, Value, Weight};
use wmi_core::{BigRational, Polynomial};

use crate::bnn::{
    derive_alpha, encode_predictive_classification, encode_predictive_regression, fit_sigmoid_cubic,
    symbolic_forward, CollapsedSample, RegressionEncoding, SigmoidCubic, DEFAULT_ATOM_BUDGET, DEFAULT_THRESHOLD,
};
use crate::error::{CiberError, Result};
use crate::mlp::{sigmoid, Head, MlpSpec};
use crate::posterior::{Dataset, Normalizer};

pub const DEFAULT_FLOOR: f64 = 1e-12;
pub const ECE_BINS: usize = 15;

#[derive(Debug, Clone)]
pub struct InferenceOptions {
    pub alpha: BigRational,
    pub cubic: SigmoidCubic,
    pub atom_budget: usize,
    pub solver: SolverOptions,
    /// Likelihoods below this are clipped before taking logs.
    pub floor: f64,
    /// Parallelize over inputs.
    pub parallel: bool,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        InferenceOptions {
            alpha: derive_alpha(),
            cubic: fit_sigmoid_cubic(&int(DEFAULT_THRESHOLD)).expect("positive threshold"),
            atom_budget: DEFAULT_ATOM_BUDGET,
            solver: SolverOptions::default(),
            floor: DEFAULT_FLOOR,
            parallel: true,
        }
    }
}

fn add(a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::Exact(x), Value::Exact(y)) => Value::Exact(x + y),
        (a, b) => Value::Approx(a.to_f64() + b.to_f64()),
    }
}

fn sum(values: impl IntoIterator<Item = Value>) -> Value {
    values.into_iter().fold(Value::Exact(BigRational::zero()), add)
}

/// Average of values, exact when every value is.
pub fn mean_value(values: &[Value]) -> Value {
    match sum(values.iter().cloned()) {
        Value::Exact(s) => Value::Exact(s / int(values.len().max(1) as i64)),
        v => Value::Approx(v.to_f64() / values.len().max(1) as f64),
    }
}

/// Results of the three WMI queries on one regression encoding.
#[derive(Debug, Clone)]
pub struct RegressionValues {
    pub partition: Value,
    pub mean: Value,
    pub density: Option<Value>,
}

pub fn regression_values(solver: &Solver, enc: &RegressionEncoding, y_star: Option<&BigRational>) -> Result<RegressionValues> {
    let mut z = Vec::new();
    let mut num = Vec::new();
    let mut dens = Vec::new();
    for frag in &enc.fragments {
        z.push(solver.wmi(frag)?.value);
        let with_y = frag.clone().with_weight(Weight::global(Polynomial::var(enc.y)));
        num.push(solver.wmi(&with_y)?.value);
        if let Some(y) = y_star {
            dens.push(solver.conditioned(frag, enc.y, y)?.value);
        }
    }
    let partition = sum(z);
    if partition.is_zero() {
        return Err(CiberError::ZeroPartition);
    }
    let mean = sum(num).checked_div(&partition)?;
    let density = match y_star {
        Some(_) => Some(sum(dens).checked_div(&partition)?),
        None => None,
    };
    Ok(RegressionValues {
        partition,
        mean,
        density,
    })
}

/// Encoding of the mean output for one collapsed sample, with the predictive
/// variance read at the plug-in weights.
pub fn encode_regression_sample(
    mlp: &MlpSpec,
    x: &[f64],
    sample: &CollapsedSample,
    opts: &InferenceOptions,
) -> Result<RegressionEncoding> {
    let sf = symbolic_forward(mlp, x, sample, opts.atom_budget)?;
    let out = mlp.forward(&sample.plug_in(), x);
    let sigma2 = mlp
        .variance(&out)
        .ok_or_else(|| CiberError::Architecture("regression needs a regression head".into()))?;
    encode_predictive_regression(&sf, 0, sigma2, &opts.alpha)
}

#[derive(Debug, Clone)]
pub struct RegressionPrediction {
    pub mean: Value,
    pub density: Option<Value>,
    pub per_sample: Vec<RegressionValues>,
}

/// Expected prediction and (optionally) the predictive density at `y_star`,
/// averaged over collapsed samples.
pub fn predict_regression(
    mlp: &MlpSpec,
    x: &[f64],
    y_star: Option<f64>,
    samples: &[CollapsedSample],
    opts: &InferenceOptions,
) -> Result<RegressionPrediction> {
    if samples.is_empty() {
        return Err(CiberError::Data("at least one collapsed sample is required".into()));
    }
    let y = y_star.map(from_f64).transpose()?;
    let solver = Solver::new(opts.solver.clone());
    let per_sample = samples
        .iter()
        .map(|s| {
            let enc = encode_regression_sample(mlp, x, s, opts)?;
            regression_values(&solver, &enc, y.as_ref())
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = mean_value(&per_sample.iter().map(|v| v.mean.clone()).collect::<Vec<_>>());
    let density = y.map(|_| mean_value(&per_sample.iter().map(|v| v.density.clone().unwrap()).collect::<Vec<_>>()));
    Ok(RegressionPrediction {
        mean,
        density,
        per_sample,
    })
}

#[derive(Debug, Clone)]
pub struct ClassificationPrediction {
    /// Averaged class scores, not normalized.
    pub scores: Vec<Value>,
    pub prediction: usize,
    /// Scores divided by their sum.
    pub probabilities: Vec<f64>,
    pub per_sample: Vec<Vec<Value>>,
}

/// Lowest index among the maxima.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in v.iter().enumerate() {
        if s > v[best] {
            best = i;
        }
    }
    best
}

/// Normalizes scores; all-zero scores become uniform.
pub fn normalize(scores: &[f64]) -> Vec<f64> {
    let total: f64 = scores.iter().sum();
    if total > 0.0 {
        scores.iter().map(|s| s / total).collect()
    } else {
        vec![1.0 / scores.len() as f64; scores.len()]
    }
}

/// Per-class sigmoid scores of one collapsed sample. A single logit is read
/// as the positive class of a binary problem.
pub fn classification_scores(
    mlp: &MlpSpec,
    x: &[f64],
    sample: &CollapsedSample,
    opts: &InferenceOptions,
) -> Result<Vec<Value>> {
    let sf = symbolic_forward(mlp, x, sample, opts.atom_budget)?;
    let solver = Solver::new(opts.solver.clone());
    let mut scores = Vec::new();
    for c in 0..mlp.outputs() {
        let mut parts = Vec::new();
        for frag in encode_predictive_classification(&sf, c, &opts.cubic) {
            parts.push(solver.wmi(&frag)?.value);
        }
        scores.push(sum(parts));
    }
    if scores.len() == 1 {
        let p = scores.pop().unwrap();
        let q = match &p {
            Value::Exact(v) => Value::Exact(int(1) - v),
            v => Value::Approx(1.0 - v.to_f64()),
        };
        scores = vec![q, p];
    }
    Ok(scores)
}

pub fn predict_classification(
    mlp: &MlpSpec,
    x: &[f64],
    samples: &[CollapsedSample],
    opts: &InferenceOptions,
) -> Result<ClassificationPrediction> {
    if samples.is_empty() {
        return Err(CiberError::Data("at least one collapsed sample is required".into()));
    }
    let per_sample = samples
        .iter()
        .map(|s| classification_scores(mlp, x, s, opts))
        .collect::<Result<Vec<_>>>()?;
    let k = per_sample[0].len();
    let scores: Vec<Value> = (0..k)
        .map(|c| mean_value(&per_sample.iter().map(|s| s[c].clone()).collect::<Vec<_>>()))
        .collect();
    let f: Vec<f64> = scores.iter().map(Value::to_f64).collect();
    Ok(ClassificationPrediction {
        prediction: argmax(&f),
        probabilities: normalize(&f),
        scores,
        per_sample,
    })
}

fn gaussian(y: f64, mean: f64, var: f64) -> f64 {
    (-(y - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Gaussian predictive of one weight vector: `(mean, density at y)`.
pub fn plug_in_regression(mlp: &MlpSpec, params: &[f64], x: &[f64], y: f64) -> (f64, f64) {
    let out = mlp.forward(params, x);
    let var = mlp.variance(&out).unwrap_or(1.0);
    (out[0], gaussian(y, out[0], var))
}

/// Equal-weight mixture of the plug-in predictives of `samples`.
pub fn mixture_regression(mlp: &MlpSpec, samples: &[Vec<f64>], x: &[f64], y: f64) -> (f64, f64) {
    let n = samples.len() as f64;
    samples.iter().fold((0.0, 0.0), |(m, d), s| {
        let (mi, di) = plug_in_regression(mlp, s, x, y);
        (m + mi / n, d + di / n)
    })
}

/// Sigmoid class scores of one weight vector.
pub fn plug_in_scores(mlp: &MlpSpec, params: &[f64], x: &[f64]) -> Vec<f64> {
    let out = mlp.forward(params, x);
    if out.len() == 1 {
        let p = sigmoid(out[0]);
        vec![1.0 - p, p]
    } else {
        out.iter().map(|&f| sigmoid(f)).collect()
    }
}

pub fn mixture_scores(mlp: &MlpSpec, samples: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let n = samples.len() as f64;
    let mut acc: Vec<f64> = Vec::new();
    for s in samples {
        let p = plug_in_scores(mlp, s, x);
        acc.resize(p.len(), 0.0);
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v / n;
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub nll: f64,
    pub rmse: Option<f64>,
    pub accuracy: Option<f64>,
    pub ece: Option<f64>,
    /// Likelihoods clipped at the floor.
    pub floored: usize,
}

pub fn evaluate_regression(means: &[f64], densities: &[f64], truth: &[f64], floor: f64) -> Metrics {
    let n = truth.len().max(1) as f64;
    let floored = densities.iter().filter(|&&d| d < floor).count();
    let nll = -densities.iter().map(|d| d.max(floor).ln()).sum::<f64>() / n;
    let mse = means.iter().zip(truth).map(|(m, y)| (m - y).powi(2)).sum::<f64>() / n;
    Metrics {
        nll,
        rmse: Some(mse.sqrt()),
        accuracy: None,
        ece: None,
        floored,
    }
}

/// Equal-width bins on the confidence of the predicted class.
pub fn expected_calibration_error(probabilities: &[Vec<f64>], predictions: &[usize], labels: &[usize], bins: usize) -> f64 {
    let mut count = vec![0usize; bins];
    let mut conf = vec![0.0; bins];
    let mut hits = vec![0.0; bins];
    for ((p, &pred), &label) in probabilities.iter().zip(predictions).zip(labels) {
        let c = p[pred];
        let b = ((c * bins as f64) as usize).min(bins - 1);
        count[b] += 1;
        conf[b] += c;
        hits[b] += if pred == label { 1.0 } else { 0.0 };
    }
    let n = labels.len().max(1) as f64;
    (0..bins)
        .filter(|&b| count[b] > 0)
        .map(|b| (hits[b] - conf[b]).abs() / n)
        .sum()
}

pub fn evaluate_classification(probabilities: &[Vec<f64>], predictions: &[usize], labels: &[usize], floor: f64) -> Metrics {
    let n = labels.len().max(1) as f64;
    let mut floored = 0;
    let mut nll = 0.0;
    for (p, &y) in probabilities.iter().zip(labels) {
        let v = p.get(y).copied().unwrap_or(0.0);
        if v < floor {
            floored += 1;
        }
        nll -= v.max(floor).ln();
    }
    let correct = predictions.iter().zip(labels).filter(|(a, b)| a == b).count();
    Metrics {
        nll: nll / n,
        rmse: None,
        accuracy: Some(correct as f64 / n),
        ece: Some(expected_calibration_error(probabilities, predictions, labels, ECE_BINS)),
        floored,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub target: f64,
    /// Expected prediction (regression) on the original scale.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    /// Predictive density of the target (regression) on the original scale.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
    /// Per-sample means (regression) or per-sample score of the predicted class.
    pub per_sample: Vec<f64>,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub task: String,
    pub collapsed: Vec<usize>,
    pub samples: usize,
    pub alpha: String,
    pub threshold: String,
    /// Class probabilities are scores divided by their sum.
    pub probabilities_normalized: bool,
    pub rows: Vec<ReportRow>,
    pub metrics: Metrics,
    pub baselines: BTreeMap<String, Metrics>,
}

impl PredictionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per input.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["index", "target", "mean", "density", "prediction", "scores", "exact"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for (i, r) in self.rows.iter().enumerate() {
            w.write_record([
                i.to_string(),
                r.target.to_string(),
                opt(r.mean),
                opt(r.density),
                r.prediction.map(|p| p.to_string()).unwrap_or_default(),
                r.scores
                    .as_ref()
                    .map(|s| s.iter().map(f64::to_string).collect::<Vec<_>>().join(";"))
                    .unwrap_or_default(),
                r.exact.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| CiberError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn metrics_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method", "nll", "rmse", "accuracy", "ece", "floored"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut rows = vec![("ciber".to_string(), &self.metrics)];
        rows.extend(self.baselines.iter().map(|(k, v)| (k.clone(), v)));
        for (name, m) in rows {
            w.write_record([
                name,
                m.nll.to_string(),
                opt(m.rmse),
                opt(m.accuracy),
                opt(m.ece),
                m.floored.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| CiberError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// What the CIBER report is compared against.
#[derive(Debug, Clone)]
pub struct Baselines<'a> {
    /// The early-stopping checkpoint.
    pub plug_in: Option<&'a [f64]>,
    /// Raw trajectory samples, used as an equal-weight mixture.
    pub mixture: &'a [Vec<f64>],
}

fn map_inputs<T: Send>(n: usize, parallel: bool, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    if parallel {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// Runs regression inference on a raw (unnormalized) test set. Densities and
/// means are reported on the original target scale.
pub fn run_regression(
    mlp: &MlpSpec,
    test: &Dataset,
    norm: &Normalizer,
    samples: &[CollapsedSample],
    baselines: &Baselines<'_>,
    opts: &InferenceOptions,
) -> Result<PredictionReport> {
    if test.is_empty() {
        return Err(CiberError::Data("test set is empty".into()));
    }
    if matches!(mlp.head, Head::Classification) {
        return Err(CiberError::Architecture("regression needs a regression head".into()));
    }
    let (sm, ss) = (norm.y_mean, norm.y_std);
    let rows = map_inputs(test.len(), opts.parallel, |i| {
        let x = norm.features(&test.x[i]);
        let y = (test.y[i] - norm.y_mean) / norm.y_std;
        let p = predict_regression(mlp, &x, Some(y), samples, opts)?;
        let exact = p.mean.is_exact() && p.density.as_ref().is_some_and(Value::is_exact);
        Ok(ReportRow {
            target: test.y[i],
            mean: Some(p.mean.to_f64() * ss + sm),
            density: p.density.map(|d| d.to_f64() / ss),
            prediction: None,
            scores: None,
            per_sample: p.per_sample.iter().map(|v| v.mean.to_f64() * ss + sm).collect(),
            exact,
        })
    })?;
    let means: Vec<f64> = rows.iter().map(|r| r.mean.unwrap()).collect();
    let dens: Vec<f64> = rows.iter().map(|r| r.density.unwrap()).collect();
    let metrics = evaluate_regression(&means, &dens, &test.y, opts.floor);

    let mut out = BTreeMap::new();
    let mut baseline = |name: &str, f: &dyn Fn(&[f64], f64) -> (f64, f64)| {
        let (m, d): (Vec<f64>, Vec<f64>) = test
            .x
            .iter()
            .zip(&test.y)
            .map(|(x, y)| {
                let (m, d) = f(&norm.features(x), (y - sm) / ss);
                (m * ss + sm, d / ss)
            })
            .unzip();
        out.insert(name.to_string(), evaluate_regression(&m, &d, &test.y, opts.floor));
    };
    if let Some(p) = baselines.plug_in {
        baseline("plug_in", &|x, y| plug_in_regression(mlp, p, x, y));
    }
    if !baselines.mixture.is_empty() {
        baseline("mixture", &|x, y| mixture_regression(mlp, baselines.mixture, x, y));
    }
    Ok(PredictionReport {
        task: "regression".into(),
        collapsed: samples[0].posterior.indices.clone(),
        samples: samples.len(),
        alpha: opts.alpha.to_string(),
        threshold: opts.cubic.d.to_string(),
        probabilities_normalized: false,
        rows,
        metrics,
        baselines: out,
    })
}

pub fn run_classification(
    mlp: &MlpSpec,
    test: &Dataset,
    norm: &Normalizer,
    samples: &[CollapsedSample],
    baselines: &Baselines<'_>,
    opts: &InferenceOptions,
) -> Result<PredictionReport> {
    if test.is_empty() {
        return Err(CiberError::Data("test set is empty".into()));
    }
    let labels: Vec<usize> = test.y.iter().map(|&y| y as usize).collect();
    test.classes()?;
    let preds = map_inputs(test.len(), opts.parallel, |i| {
        predict_classification(mlp, &norm.features(&test.x[i]), samples, opts)
    })?;
    let rows: Vec<ReportRow> = preds
        .iter()
        .zip(&test.y)
        .map(|(p, &y)| ReportRow {
            target: y,
            mean: None,
            density: None,
            prediction: Some(p.prediction),
            scores: Some(p.scores.iter().map(Value::to_f64).collect()),
            per_sample: p.per_sample.iter().map(|s| s[p.prediction].to_f64()).collect(),
            exact: p.scores.iter().all(Value::is_exact),
        })
        .collect();
    let probs: Vec<Vec<f64>> = preds.iter().map(|p| p.probabilities.clone()).collect();
    let hard: Vec<usize> = preds.iter().map(|p| p.prediction).collect();
    let metrics = evaluate_classification(&probs, &hard, &labels, opts.floor);

    let mut out = BTreeMap::new();
    let mut baseline = |name: &str, f: &dyn Fn(&[f64]) -> Vec<f64>| {
        let scores: Vec<Vec<f64>> = test.x.iter().map(|x| f(&norm.features(x))).collect();
        let hard: Vec<usize> = scores.iter().map(|s| argmax(s)).collect();
        let probs: Vec<Vec<f64>> = scores.iter().map(|s| normalize(s)).collect();
        out.insert(name.to_string(), evaluate_classification(&probs, &hard, &labels, opts.floor));
    };
    if let Some(p) = baselines.plug_in {
        baseline("plug_in", &|x| plug_in_scores(mlp, p, x));
    }
    if !baselines.mixture.is_empty() {
        baseline("mixture", &|x| mixture_scores(mlp, baselines.mixture, x));
    }
    Ok(PredictionReport {
        task: "classification".into(),
        collapsed: samples[0].posterior.indices.clone(),
        samples: samples.len(),
        alpha: opts.alpha.to_string(),
        threshold: opts.cubic.d.to_string(),
        probabilities_normalized: true,
        rows,
        metrics,
        baselines: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_edge_cases() {
        // perfect deterministic classifier
        let probs = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let m = evaluate_classification(&probs, &[0, 1], &[0, 1], DEFAULT_FLOOR);
        assert_eq!(m.accuracy, Some(1.0));
        assert_eq!(m.ece, Some(0.0));
        assert_eq!(m.nll, 0.0);
        // uniform classifier on balanced data
        let probs = vec![vec![0.5, 0.5]; 4];
        let m = evaluate_classification(&probs, &[0; 4], &[0, 1, 0, 1], DEFAULT_FLOOR);
        assert!((m.nll - 2f64.ln()).abs() < 1e-15);
        // density 1/2 everywhere
        let m = evaluate_regression(&[0.0; 3], &[0.5; 3], &[1.0, 2.0, 2.0], DEFAULT_FLOOR);
        assert!((m.nll - 2f64.ln()).abs() < 1e-15);
        assert!((m.rmse.unwrap() - 3f64.sqrt()).abs() < 1e-15);
        // zero likelihood is clipped and counted
        let m = evaluate_regression(&[0.0], &[0.0], &[0.0], DEFAULT_FLOOR);
        assert_eq!(m.floored, 1);
        assert!((m.nll + DEFAULT_FLOOR.ln()).abs() < 1e-12);
    }

    #[test]
    fn ece_bins() {
        // two predictions at confidence 0.9, one right: |0.5 - 0.9| weighted by 2/2
        let probs = vec![vec![0.9, 0.1], vec![0.9, 0.1]];
        let e = expected_calibration_error(&probs, &[0, 0], &[0, 1], ECE_BINS);
        assert!((e - 0.4).abs() < 1e-12);
    }

    #[test]
    fn argmax_prefers_lower_index() {
        assert_eq!(argmax(&[0.3, 0.7, 0.7]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(normalize(&[0.0, 0.0]), vec![0.5, 0.5]);
    }
}
