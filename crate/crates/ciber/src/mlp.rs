//! Fully connected ReLU networks over a flat weight vector.
//!
//! Layer `l` maps `widths[l]` inputs to `widths[l + 1]` outputs. Its parameters
//! are stored as the weight matrix in row-major order (`out × in`) followed by
//! the bias vector. Hidden layers apply ReLU; the last layer is affine.

use serde::{Deserialize, Serialize};

use crate::error::{CiberError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// Two outputs: mean and log-variance.
    Regression,
    /// One output (the mean) with a fixed noise variance.
    Homoscedastic { variance: f64 },
    /// One logit per class.
    Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub widths: Vec<usize>,
    pub head: Head,
}

/// Which layer a parameter belongs to, counted from the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerChoice {
    Last,
    SecondToLast,
}

/// Location of a parameter inside the flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Weight { layer: usize, row: usize, col: usize },
    Bias { layer: usize, row: usize },
}

impl Param {
    pub fn layer(self) -> usize {
        match self {
            Param::Weight { layer, .. } | Param::Bias { layer, .. } => layer,
        }
    }
}

/// Target of one training example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Real(f64),
    Class(usize),
}

/// Log-variance outputs are clamped to this range.
pub const LOG_VAR_RANGE: (f64, f64) = (-12.0, 12.0);

impl MlpSpec {
    pub fn new(widths: Vec<usize>, head: Head) -> Result<Self> {
        let spec = MlpSpec { widths, head };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 {
            return Err(CiberError::Architecture("at least an input and an output width are required".into()));
        }
        if self.widths.iter().any(|&w| w == 0) {
            return Err(CiberError::Architecture("layer widths must be positive".into()));
        }
        let out = *self.widths.last().unwrap();
        match self.head {
            Head::Regression if out != 2 => Err(CiberError::Architecture(format!(
                "regression head needs 2 outputs (mean, log-variance), got {out}"
            ))),
            Head::Homoscedastic { variance } if out != 1 || !(variance > 0.0) => Err(CiberError::Architecture(
                "homoscedastic head needs 1 output and a positive variance".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn inputs(&self) -> usize {
        self.widths[0]
    }

    pub fn outputs(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        (0..self.num_layers()).map(|l| self.layer_size(l)).sum()
    }

    pub fn layer_size(&self, l: usize) -> usize {
        (self.widths[l] + 1) * self.widths[l + 1]
    }

    /// Offset of layer `l` in the flat vector.
    pub fn layer_offset(&self, l: usize) -> usize {
        (0..l).map(|k| self.layer_size(k)).sum()
    }

    pub fn layer_index(&self, choice: LayerChoice) -> Result<usize> {
        let n = self.num_layers();
        match choice {
            LayerChoice::Last => Ok(n - 1),
            LayerChoice::SecondToLast if n >= 2 => Ok(n - 2),
            LayerChoice::SecondToLast => Err(CiberError::Architecture("network has no hidden layer".into())),
        }
    }

    pub fn weight_index(&self, layer: usize, row: usize, col: usize) -> usize {
        self.layer_offset(layer) + row * self.widths[layer] + col
    }

    pub fn bias_index(&self, layer: usize, row: usize) -> usize {
        self.layer_offset(layer) + self.widths[layer + 1] * self.widths[layer] + row
    }

    pub fn locate(&self, index: usize) -> Option<Param> {
        let mut off = 0;
        for l in 0..self.num_layers() {
            let size = self.layer_size(l);
            if index < off + size {
                let local = index - off;
                let fan_in = self.widths[l];
                let rows = self.widths[l + 1];
                return Some(if local < rows * fan_in {
                    Param::Weight {
                        layer: l,
                        row: local / fan_in,
                        col: local % fan_in,
                    }
                } else {
                    Param::Bias {
                        layer: l,
                        row: local - rows * fan_in,
                    }
                });
            }
            off += size;
        }
        None
    }

    pub fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(CiberError::Architecture(format!(
                "expected {} weights, got {}",
                self.num_params(),
                params.len()
            )));
        }
        Ok(())
    }

    /// Network outputs at `x`.
    pub fn forward(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        self.trace(params, x).pop().unwrap()
    }

    /// Activations of every layer, input first; hidden entries are post-ReLU.
    fn trace(&self, params: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        for l in 0..self.num_layers() {
            let (fan_in, rows) = (self.widths[l], self.widths[l + 1]);
            let w = &params[self.layer_offset(l)..];
            let input = acts.last().unwrap();
            let mut out = vec![0.0; rows];
            for (j, o) in out.iter_mut().enumerate() {
                let mut z = w[rows * fan_in + j];
                for k in 0..fan_in {
                    z += w[j * fan_in + k] * input[k];
                }
                *o = if l + 1 < self.num_layers() { z.max(0.0) } else { z };
            }
            acts.push(out);
        }
        acts
    }

    /// Predictive variance at `x` (regression heads only).
    pub fn variance(&self, outputs: &[f64]) -> Option<f64> {
        match self.head {
            Head::Regression => Some(outputs[1].clamp(LOG_VAR_RANGE.0, LOG_VAR_RANGE.1).exp()),
            Head::Homoscedastic { variance } => Some(variance),
            Head::Classification => None,
        }
    }

    /// Negative log-likelihood of one example (up to the Gaussian constant).
    pub fn loss(&self, outputs: &[f64], target: Target) -> f64 {
        let (loss, _) = self.output_grad(outputs, target);
        loss
    }

    fn output_grad(&self, out: &[f64], target: Target) -> (f64, Vec<f64>) {
        match (self.head, target) {
            (Head::Regression, Target::Real(y)) => {
                let raw = out[1];
                let s = raw.clamp(LOG_VAR_RANGE.0, LOG_VAR_RANGE.1);
                let inv = (-s).exp();
                let e = y - out[0];
                let ds = if raw == s { 0.5 * (1.0 - e * e * inv) } else { 0.0 };
                (0.5 * (s + e * e * inv), vec![-e * inv, ds])
            }
            (Head::Homoscedastic { variance }, Target::Real(y)) => {
                let e = y - out[0];
                (0.5 * e * e / variance, vec![-e / variance])
            }
            (Head::Classification, Target::Class(c)) => {
                let mut loss = 0.0;
                let grad = out
                    .iter()
                    .enumerate()
                    .map(|(k, &f)| {
                        let t = if k == c { 1.0 } else { 0.0 };
                        loss += softplus(f) - t * f;
                        sigmoid(f) - t
                    })
                    .collect();
                (loss, grad)
            }
            _ => (f64::NAN, vec![f64::NAN; out.len()]),
        }
    }

    /// Adds the gradient of the loss at one example to `grad` and returns the loss.
    pub fn accumulate_grad(&self, params: &[f64], x: &[f64], target: Target, grad: &mut [f64]) -> f64 {
        let acts = self.trace(params, x);
        let (loss, mut delta) = self.output_grad(acts.last().unwrap(), target);
        for l in (0..self.num_layers()).rev() {
            let (fan_in, rows) = (self.widths[l], self.widths[l + 1]);
            let off = self.layer_offset(l);
            let input = &acts[l];
            for j in 0..rows {
                grad[off + rows * fan_in + j] += delta[j];
                for k in 0..fan_in {
                    grad[off + j * fan_in + k] += delta[j] * input[k];
                }
            }
            if l == 0 {
                break;
            }
            let mut next = vec![0.0; fan_in];
            for (k, n) in next.iter_mut().enumerate() {
                if input[k] > 0.0 {
                    *n = (0..rows).map(|j| delta[j] * params[off + j * fan_in + k]).sum();
                }
            }
            delta = next;
        }
        loss
    }
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net() -> MlpSpec {
        MlpSpec::new(vec![3, 4, 2], Head::Regression).unwrap()
    }

    #[test]
    fn layout_round_trips() {
        let m = net();
        assert_eq!(m.num_params(), (3 + 1) * 4 + (4 + 1) * 2);
        for i in 0..m.num_params() {
            let idx = match m.locate(i).unwrap() {
                Param::Weight { layer, row, col } => m.weight_index(layer, row, col),
                Param::Bias { layer, row } => m.bias_index(layer, row),
            };
            assert_eq!(idx, i);
        }
        assert!(m.locate(m.num_params()).is_none());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (m, target) in [
            (net(), Target::Real(0.7)),
            (MlpSpec::new(vec![3, 4, 1], Head::Homoscedastic { variance: 0.5 }).unwrap(), Target::Real(-0.3)),
            (MlpSpec::new(vec![3, 4, 3], Head::Classification).unwrap(), Target::Class(1)),
        ] {
            let params: Vec<f64> = (0..m.num_params()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0).collect();
            let x = [0.3, -1.2, 0.8];
            let mut grad = vec![0.0; params.len()];
            m.accumulate_grad(&params, &x, target, &mut grad);
            let h = 1e-6;
            for i in 0..params.len() {
                let mut p = params.clone();
                p[i] += h;
                let up = m.loss(&m.forward(&p, &x), target);
                p[i] -= 2.0 * h;
                let down = m.loss(&m.forward(&p, &x), target);
                let fd = (up - down) / (2.0 * h);
                assert!((fd - grad[i]).abs() < 1e-5, "param {i}: {fd} vs {}", grad[i]);
            }
        }
    }

    #[test]
    fn rejects_bad_heads() {
        assert!(MlpSpec::new(vec![2, 1], Head::Regression).is_err());
        assert!(MlpSpec::new(vec![2, 0, 2], Head::Regression).is_err());
        assert!(MlpSpec::new(vec![2], Head::Classification).is_err());
        assert!(MlpSpec::new(vec![2, 1], Head::Homoscedastic { variance: 0.0 }).is_err());
    }

    #[test]
    fn stable_sigmoid() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert_eq!(softplus(-800.0), 0.0);
    }
}
