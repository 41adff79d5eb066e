//! Small end-to-end experiments with known answers, shared by the CLI's
//! `reproduce` command and the acceptance suite.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use wmi_core::integrate::lattice::gauss_legendre;
use wmi_core::lra::Formula;
use wmi_core::rational::{decimal, int, to_f64};
use wmi_core::wmi::{Solver, Value, Weight, WmiProblem};
use wmi_core::{BigRational, Polynomial};

use crate::bnn::{collapse, encode_posterior, symbolic_forward, CollapsedSample, RegressionEncoding, SymbolicForward};
use crate::error::Result;
use crate::inference::{
    classification_scores, encode_regression_sample, mixture_regression, regression_values,
    run_regression, Baselines, InferenceOptions,
};
use crate::mlp::{sigmoid, Head, LayerChoice, MlpSpec};
use crate::posterior::{friedman1, layer_params, train_and_collect, Dataset, Normalizer, TrajectoryConfig};

/// `E[f]` under the uniform posterior, one WMI call per activation cell.
pub fn expected_output(sf: &SymbolicForward, output: usize, solver: &Solver) -> Result<Value> {
    let mut total = BigRational::zero();
    let mut approx = 0.0;
    let mut exact = true;
    for c in &sf.cells {
        let p = WmiProblem::new(
            sf.vars.clone(),
            Formula::and(c.atoms.iter().cloned().map(Formula::atom)),
            vec![
                Weight::global(Polynomial::constant(sf.density())),
                Weight::global(Polynomial::from_linear(&c.outputs[output])),
            ],
            sf.domain.clone(),
        );
        match solver.wmi(&p)?.value {
            Value::Exact(v) => total += v,
            v => {
                exact = false;
                approx += v.to_f64();
            }
        }
    }
    Ok(if exact {
        Value::Exact(total)
    } else {
        Value::Approx(approx + to_f64(&total))
    })
}

/// `f(x) = relu(w·x)` with one weight uniform on `[−3, 3]`; the output layer
/// is fixed to the identity. Parameters: `[w, b₁, v, b₂]`.
pub fn example1_network() -> Result<(MlpSpec, CollapsedSample)> {
    let mlp = MlpSpec::new(vec![1, 1, 1], Head::Homoscedastic { variance: 1.0 })?;
    let weights = vec![0.0, 0.0, 1.0, 0.0];
    let mut lo = weights.clone();
    lo[0] = -3.0;
    let mut hi = weights.clone();
    hi[0] = 3.0;
    let post = encode_posterior(&[lo, hi], &[0], 0.0)?;
    Ok((mlp, CollapsedSample::new(weights, post)))
}

/// Expected prediction of the Example 1 network at `x = 1`.
pub fn example1() -> Result<Value> {
    let (mlp, sample) = example1_network()?;
    let sf = symbolic_forward(&mlp, &[1.0], &sample, 4)?;
    expected_output(&sf, 0, &Solver::default())
}

#[derive(Debug, Clone)]
pub struct Step4 {
    pub mean: Value,
    pub density: Value,
    pub partition: Value,
}

/// Predictive encoding of the Example 1 network at `x = 1`.
pub fn step4_encoding(opts: &InferenceOptions) -> Result<RegressionEncoding> {
    let (mlp, sample) = example1_network()?;
    encode_regression_sample(&mlp, &[1.0], &sample, opts)
}

/// The Example 1 network with a triangular predictive of unit variance:
/// `E[y | x = 1]`, `p(y = 1 | x = 1)` and the partition function.
pub fn step4(opts: &InferenceOptions) -> Result<Step4> {
    let enc = step4_encoding(opts)?;
    let v = regression_values(&Solver::new(opts.solver.clone()), &enc, Some(&int(1)))?;
    Ok(Step4 {
        mean: v.mean,
        density: v.density.expect("requested"),
        partition: v.partition,
    })
}

/// Bayesian linear regression `y = w·x + b + ε` with a Gaussian prior, where
/// the posterior predictive is Gaussian and available in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugateSetup {
    pub n: usize,
    pub noise_var: f64,
    pub prior_var: f64,
    pub true_w: f64,
    pub true_b: f64,
    pub x_range: f64,
    pub test_inputs: Vec<f64>,
    pub samples: usize,
    pub grid: usize,
}

impl Default for ConjugateSetup {
    fn default() -> Self {
        ConjugateSetup {
            n: 10,
            noise_var: 0.25,
            prior_var: 1.0,
            true_w: 1.5,
            true_b: -0.5,
            x_range: 2.0,
            test_inputs: vec![-1.5, -0.5, 0.5, 1.5],
            samples: 5,
            grid: 801,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlResult {
    pub seed: u64,
    pub kl_ciber: f64,
    pub kl_mixture: f64,
}

fn gaussian(y: f64, m: f64, v: f64) -> f64 {
    (-(y - m).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
}

/// `KL(p ‖ q)` on a uniform grid over `m ± 8s` of the Gaussian `p`, with `q`
/// clipped at `floor`.
fn kl_to(m: f64, v: f64, grid: usize, floor: f64, q: &mut dyn FnMut(f64) -> Result<f64>) -> Result<f64> {
    let s = v.sqrt();
    let (lo, hi) = (m - 8.0 * s, m + 8.0 * s);
    let h = (hi - lo) / (grid - 1) as f64;
    let mut acc = 0.0;
    for i in 0..grid {
        let y = lo + i as f64 * h;
        let p = gaussian(y, m, v);
        let w = if i == 0 || i + 1 == grid { 0.5 } else { 1.0 };
        if p > 0.0 {
            acc += w * h * p * (p / q(y)?.max(floor)).ln();
        }
    }
    Ok(acc)
}

/// KL divergences of CIBER and of the plug-in mixture from the exact
/// predictive, averaged over the test inputs, for one seed.
pub fn conjugate_regression(setup: &ConjugateSetup, seed: u64, opts: &InferenceOptions) -> Result<KlResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = setup.noise_var.sqrt();
    let (mut sxx, mut sx, mut sxy, mut sy) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..setup.n {
        let x: f64 = rng.random_range(-setup.x_range..setup.x_range);
        let e: f64 = StandardNormal.sample(&mut rng);
        let y = setup.true_w * x + setup.true_b + noise * e;
        sxx += x * x;
        sx += x;
        sxy += x * y;
        sy += y;
    }
    // posterior precision A = ΦᵀΦ/σ² + I/τ² over (w, b)
    let (s2, t2) = (setup.noise_var, setup.prior_var);
    let (a, b, d) = (sxx / s2 + 1.0 / t2, sx / s2, setup.n as f64 / s2 + 1.0 / t2);
    let det = a * d - b * b;
    let (c00, c01, c11) = (d / det, -b / det, a / det);
    let mu = (c00 * sxy / s2 + c01 * sy / s2, c01 * sxy / s2 + c11 * sy / s2);
    let l00 = c00.sqrt();
    let l10 = c01 / l00;
    let l11 = (c11 - l10 * l10).sqrt();
    let samples: Vec<Vec<f64>> = (0..setup.samples)
        .map(|_| {
            let z0: f64 = StandardNormal.sample(&mut rng);
            let z1: f64 = StandardNormal.sample(&mut rng);
            vec![mu.0 + l00 * z0, mu.1 + l10 * z0 + l11 * z1]
        })
        .collect();

    let mlp = MlpSpec::new(vec![1, 1], Head::Homoscedastic { variance: setup.noise_var })?;
    let collapsed = collapse(&samples, &[0, 1], 0.0)?;
    let solver = Solver::new(opts.solver.clone());
    let (mut kl_c, mut kl_m) = (0.0, 0.0);
    for &x in &setup.test_inputs {
        let m = mu.0 * x + mu.1;
        let v = c00 * x * x + 2.0 * c01 * x + c11 + s2;
        // every parameter is collapsed, so all collapsed samples coincide
        let enc = encode_regression_sample(&mlp, &[x], &collapsed[0], opts)?;
        let z = enc
            .fragments
            .iter()
            .map(|f| solver.wmi(f).map(|s| s.value.to_f64()))
            .sum::<wmi_core::Result<f64>>()?;
        kl_c += kl_to(m, v, setup.grid, opts.floor, &mut |y| {
            let y = wmi_core::rational::from_f64(y)?;
            let mut d = 0.0;
            for f in &enc.fragments {
                d += solver.conditioned(f, enc.y, &y)?.value.to_f64();
            }
            Ok(d / z)
        })?;
        kl_m += kl_to(m, v, setup.grid, opts.floor, &mut |y| Ok(mixture_regression(&mlp, &samples, &[x], y).1))?;
    }
    let k = setup.test_inputs.len() as f64;
    Ok(KlResult {
        seed,
        kl_ciber: kl_c / k,
        kl_mixture: kl_m / k,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub truth: Vec<f64>,
    pub ciber: Vec<f64>,
    pub mixture: Vec<f64>,
    pub ciber_error: f64,
    pub mixture_error: f64,
}

/// `∫ σ(f) N(f; μ·x, xᵀΣx) df` by Gauss–Legendre quadrature over ±10 sd.
pub fn probit_integral(mean: f64, var: f64) -> f64 {
    let s = var.sqrt();
    let half = 10.0 * s;
    gauss_legendre(200)
        .iter()
        .map(|&(u, w)| {
            let f = mean + half * u;
            w * half * sigmoid(f) * gaussian(f, mean, var)
        })
        .sum()
}

/// A linear logit `f = w·x` under a Gaussian posterior over `w`; CIBER sees a
/// box around five posterior samples, the baseline averages `σ(w_s·x)`.
pub fn classification_integral(seed: u64, inputs: usize, opts: &InferenceOptions) -> Result<IntegralResult> {
    let mu = [1.0, -0.6];
    let cov: [[f64; 2]; 2] = [[0.6, 0.15], [0.15, 0.4]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l00 = cov[0][0].sqrt();
    let l10 = cov[1][0] / l00;
    let l11 = (cov[1][1] - l10 * l10).sqrt();
    let samples: Vec<Vec<f64>> = (0..5)
        .map(|_| {
            let z0: f64 = StandardNormal.sample(&mut rng);
            let z1: f64 = StandardNormal.sample(&mut rng);
            vec![mu[0] + l00 * z0, mu[1] + l10 * z0 + l11 * z1, 0.0]
        })
        .collect();
    let mlp = MlpSpec::new(vec![2, 1], Head::Classification)?;
    let collapsed = collapse(&samples, &[0, 1], 0.0)?;
    let (mut truth, mut ciber, mut mixture) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..inputs {
        let z: [f64; 2] = [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)];
        let x = [1.5 * z[0], 1.5 * z[1]];
        let m = mu[0] * x[0] + mu[1] * x[1];
        let v = cov[0][0] * x[0] * x[0] + 2.0 * cov[0][1] * x[0] * x[1] + cov[1][1] * x[1] * x[1];
        truth.push(probit_integral(m, v));
        ciber.push(classification_scores(&mlp, &x, &collapsed[0], opts)?[1].to_f64());
        mixture.push(samples.iter().map(|w| sigmoid(w[0] * x[0] + w[1] * x[1])).sum::<f64>() / 5.0);
    }
    let err = |est: &[f64]| est.iter().zip(&truth).map(|(a, b)| (a - b).abs()).sum::<f64>() / inputs as f64;
    Ok(IntegralResult {
        ciber_error: err(&ciber),
        mixture_error: err(&mixture),
        truth,
        ciber,
        mixture,
    })
}

/// Random small networks and boxes; returns the partition function of each
/// regression encoding.
pub fn normalization_suite(seed: u64, count: usize, opts: &InferenceOptions) -> Result<Vec<Value>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let solver = Solver::new(opts.solver.clone());
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let hidden = rng.random_range(1..=3);
        let inputs = rng.random_range(1..=3);
        let head = if i % 2 == 0 {
            Head::Regression
        } else {
            Head::Homoscedastic {
                variance: rng.random_range(0.1..2.0),
            }
        };
        let outputs = if head == Head::Regression { 2 } else { 1 };
        let mlp = MlpSpec::new(vec![inputs, hidden, outputs], head)?;
        let samples: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..mlp.num_params()).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let layer = if rng.random_bool(0.5) {
            LayerChoice::Last
        } else {
            LayerChoice::SecondToLast
        };
        let mut candidates = layer_params(&mlp, layer)?;
        let k = rng.random_range(1..=candidates.len().min(3));
        let mut chosen = Vec::new();
        for _ in 0..k {
            chosen.push(candidates.swap_remove(rng.random_range(0..candidates.len())));
        }
        chosen.sort_unstable();
        let post = encode_posterior(&samples, &chosen, 0.0)?;
        let sample = CollapsedSample::new(samples[0].clone(), post);
        let x: Vec<f64> = (0..inputs).map(|_| rng.random_range(-2.0..2.0)).collect();
        let enc = encode_regression_sample(&mlp, &x, &sample, opts)?;
        let mut z = Value::Exact(BigRational::zero());
        for frag in &enc.fragments {
            z = match (z, solver.wmi(frag)?.value) {
                (Value::Exact(a), Value::Exact(b)) => Value::Exact(a + b),
                (a, b) => Value::Approx(a.to_f64() + b.to_f64()),
            };
        }
        out.push(z);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeskConfig {
    pub rows: usize,
    pub noise: f64,
    pub train_fraction: f64,
    pub hidden: usize,
    pub train: TrajectoryConfig,
    /// Test rows used for inference, at most.
    pub test_rows: usize,
}

impl Default for DeskConfig {
    fn default() -> Self {
        DeskConfig {
            rows: 500,
            noise: 1.0,
            train_fraction: 0.8,
            hidden: 50,
            train: TrajectoryConfig {
                epochs: 300,
                learning_rate: 0.01,
                collect_learning_rate: 0.005,
                samples: 5,
                stride: 2,
                // a 40-row validation split is noisy; its minimum sits well
                // below the typical post-convergence loss
                band: 0.25,
                ..TrajectoryConfig::default()
            },
            test_rows: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeskResult {
    pub seed: u64,
    pub nll_ciber: f64,
    pub nll_plug_in: f64,
    pub nll_mixture: f64,
    pub rmse_ciber: f64,
    pub rmse_plug_in: f64,
    pub floored: usize,
}

/// Friedman-1 regression through CSV, one hidden layer, CIBER collapsing the
/// whole last layer, compared with the early-stopping checkpoint.
pub fn desk_regression(cfg: &DeskConfig, seed: u64, opts: &InferenceOptions) -> Result<DeskResult> {
    let raw = friedman1(cfg.rows, cfg.noise, seed);
    let ds = Dataset::from_csv_reader(raw.to_csv("y")?.as_bytes(), Some("y"))?;
    let (train, test) = ds.split(cfg.train_fraction, seed.wrapping_add(1));
    let test = test.subset(&(0..test.len().min(cfg.test_rows)).collect::<Vec<_>>());
    let norm = Normalizer::fit(&train, true);
    let mlp = MlpSpec::new(vec![ds.features(), cfg.hidden, 2], Head::Regression)?;
    let tc = TrajectoryConfig {
        seed,
        ..cfg.train.clone()
    };
    let out = train_and_collect(&norm.apply(&train), &mlp, &tc)?;
    let collapsed = collapse(&out.samples, &layer_params(&mlp, LayerChoice::Last)?, 0.0)?;
    let report = run_regression(
        &mlp,
        &test,
        &norm,
        &collapsed,
        &Baselines {
            plug_in: Some(&out.best),
            mixture: &out.samples,
        },
        opts,
    )?;
    let plug = &report.baselines["plug_in"];
    Ok(DeskResult {
        seed,
        nll_ciber: report.metrics.nll,
        nll_plug_in: plug.nll,
        nll_mixture: report.baselines["mixture"].nll,
        rmse_ciber: report.metrics.rmse.unwrap_or(f64::NAN),
        rmse_plug_in: plug.rmse.unwrap_or(f64::NAN),
        floored: report.metrics.floored,
    })
}

/// One row of the reproduction table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub expected: String,
    pub obtained: String,
    pub tolerance: String,
    pub pass: bool,
}

fn show(v: &Value) -> String {
    match v {
        Value::Exact(r) if r.denom().bits() <= 64 => format!("{r} ({})", decimal(r, 15)),
        Value::Exact(r) => decimal(r, 15),
        Value::Approx(x) => format!("{x:.15e}"),
    }
}

fn within(v: &Value, target: f64, tol: f64) -> bool {
    (v.to_f64() - target).abs() <= tol
}

/// The checks with published reference values. `seed` drives the sampled
/// experiments; the table text is a pure function of it.
pub fn reproduce(seed: u64, opts: &InferenceOptions) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let e1 = example1()?;
    rows.push(CheckRow {
        name: "example1.expected_prediction".into(),
        expected: "3/4".into(),
        obtained: show(&e1),
        tolerance: "exact".into(),
        pass: e1.exact() == Some(&BigRational::new(3.into(), 4.into())),
    });
    let s4 = step4(opts)?;
    rows.push(CheckRow {
        name: "step4.expected_prediction".into(),
        expected: "0.752".into(),
        obtained: show(&s4.mean),
        tolerance: "0.005".into(),
        pass: within(&s4.mean, 0.752, 0.005),
    });
    rows.push(CheckRow {
        name: "step4.density_at_1".into(),
        expected: "0.164".into(),
        obtained: show(&s4.density),
        tolerance: "0.005".into(),
        pass: within(&s4.density, 0.164, 0.005),
    });
    rows.push(CheckRow {
        name: "step4.partition".into(),
        expected: "1".into(),
        obtained: show(&s4.partition),
        tolerance: "exact".into(),
        pass: s4.partition.exact() == Some(&int(1)),
    });

    let setup = ConjugateSetup::default();
    let kls = (0..10)
        .map(|i| conjugate_regression(&setup, seed.wrapping_add(i), opts))
        .collect::<Result<Vec<_>>>()?;
    let wins = kls.iter().filter(|k| k.kl_ciber < k.kl_mixture).count();
    let mean = |f: fn(&KlResult) -> f64| kls.iter().map(f).sum::<f64>() / kls.len() as f64;
    rows.push(CheckRow {
        name: "regression_kl.ciber_beats_mixture".into(),
        expected: ">= 8/10 seeds (reference 0.030 vs 0.085)".into(),
        obtained: format!(
            "{wins}/10 seeds (mean {:.6} vs {:.6})",
            mean(|k| k.kl_ciber),
            mean(|k| k.kl_mixture)
        ),
        tolerance: "ordering".into(),
        pass: wins >= 8,
    });

    let ci = classification_integral(seed, 20, opts)?;
    rows.push(CheckRow {
        name: "classification_integral.ciber_error_below_mixture".into(),
        expected: "ciber < mixture (reference |0.826-0.823| vs |0.732-0.823|)".into(),
        obtained: format!("{:.6} vs {:.6}", ci.ciber_error, ci.mixture_error),
        tolerance: "ordering".into(),
        pass: ci.ciber_error < ci.mixture_error,
    });
    Ok(rows)
}

pub fn render_table(rows: &[CheckRow]) -> String {
    let headers = ["check", "expected", "obtained", "tolerance", "status"];
    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.name.clone(),
                r.expected.clone(),
                r.obtained.clone(),
                r.tolerance.clone(),
                if r.pass { "PASS".into() } else { "FAIL".into() },
            ]
        })
        .collect();
    let mut width = headers.map(str::len);
    for c in &cells {
        for (w, s) in width.iter_mut().zip(c) {
            *w = (*w).max(s.chars().count());
        }
    }
    let line = |c: &[String]| {
        c.iter()
            .zip(width)
            .map(|(s, w)| format!("{s:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(&headers.map(String::from));
    out.push('\n');
    for c in &cells {
        out.push_str(&line(c));
        out.push('\n');
    }
    out
}
