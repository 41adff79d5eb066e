//! Encoding a ReLU network with a box-uniform posterior over a subset of its
//! weights, and a predictive density, as WMI problem fragments.
//!
//! One fragment is produced per activation cell of the collapsed weights, so
//! that the network output is affine inside each fragment.

use std::collections::HashMap;
use std::sync::OnceLock;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use wmi_core::integrate::lattice::gauss_legendre;
use wmi_core::lra::{has_interior, Atom, BoxDomain, Constraint, Formula};
use wmi_core::rational::{from_f64, int, rationalize, to_f64};
use wmi_core::wmi::{Literal, Weight, WmiProblem};
use wmi_core::{BigRational, LinearExpr, Polynomial, Var, VarTable};

use crate::error::{CiberError, Result};
use crate::mlp::{sigmoid, MlpSpec};

/// Largest number of symbolic preactivations accepted by [`symbolic_forward`].
pub const DEFAULT_ATOM_BUDGET: usize = 16;

/// Default saturation threshold of the classification encoding.
pub const DEFAULT_THRESHOLD: i64 = 4;

/// Per-weight bounds of the uniform posterior over the collapsed weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorBox {
    pub indices: Vec<usize>,
    #[serde(with = "rational_vec")]
    pub lower: Vec<BigRational>,
    #[serde(with = "rational_vec")]
    pub upper: Vec<BigRational>,
}

impl PosteriorBox {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn midpoint(&self, i: usize) -> BigRational {
        (&self.lower[i] + &self.upper[i]) / int(2)
    }
}

/// Fixed values for the sampled weights and a box over the collapsed ones.
/// Entries of `weights` at collapsed indices are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapsedSample {
    pub weights: Vec<f64>,
    pub posterior: PosteriorBox,
}

impl CollapsedSample {
    pub fn new(weights: Vec<f64>, posterior: PosteriorBox) -> Self {
        CollapsedSample { weights, posterior }
    }

    /// The weight vector with the collapsed weights at their box midpoints.
    pub fn plug_in(&self) -> Vec<f64> {
        let mut w = self.weights.clone();
        for (i, &idx) in self.posterior.indices.iter().enumerate() {
            w[idx] = to_f64(&self.posterior.midpoint(i));
        }
        w
    }
}

/// Coordinate-wise hull of the samples over `collapsed`, widened on both sides
/// by `padding` times the width.
pub fn encode_posterior(samples: &[Vec<f64>], collapsed: &[usize], padding: f64) -> Result<PosteriorBox> {
    if samples.is_empty() {
        return Err(CiberError::Data("at least one weight sample is required".into()));
    }
    let (mut lower, mut upper) = (Vec::new(), Vec::new());
    for &idx in collapsed {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in samples {
            let v = *s
                .get(idx)
                .ok_or_else(|| CiberError::Architecture(format!("collapsed index {idx} out of range")))?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let pad = padding * (hi - lo);
        lower.push(from_f64(lo - pad)?);
        upper.push(from_f64(hi + pad)?);
    }
    Ok(PosteriorBox {
        indices: collapsed.to_vec(),
        lower,
        upper,
    })
}

/// One collapsed sample per trajectory sample, all sharing the hull box.
pub fn collapse(samples: &[Vec<f64>], collapsed: &[usize], padding: f64) -> Result<Vec<CollapsedSample>> {
    let posterior = encode_posterior(samples, collapsed, padding)?;
    Ok(samples
        .iter()
        .map(|w| CollapsedSample::new(w.clone(), posterior.clone()))
        .collect())
}

/// An activation cell: the sign pattern of the symbolic preactivations, the
/// atoms selecting it, and the network outputs inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionCell {
    pub pattern: Vec<bool>,
    pub atoms: Vec<Atom>,
    pub outputs: Vec<LinearExpr>,
}

#[derive(Debug, Clone)]
pub struct SymbolicForward {
    pub vars: VarTable,
    /// Box over the non-degenerate collapsed weights.
    pub domain: BoxDomain,
    /// Parameter index and variable of every non-degenerate collapsed weight.
    pub collapsed: Vec<(usize, Var)>,
    pub preactivations: Vec<LinearExpr>,
    pub cells: Vec<RegionCell>,
}

impl SymbolicForward {
    /// Cell containing `point` (values for the collapsed variables).
    pub fn locate(&self, point: &dyn Fn(Var) -> f64) -> Option<&RegionCell> {
        self.cells.iter().find(|c| {
            c.pattern
                .iter()
                .zip(&self.preactivations)
                .all(|(&on, z)| (z.eval_f64(point) >= 0.0) == on)
        })
    }

    /// Reciprocal of the box volume: the uniform posterior density.
    pub fn density(&self) -> BigRational {
        self.domain.volume().recip()
    }
}

fn mul(w: &LinearExpr, a: &LinearExpr) -> Result<LinearExpr> {
    match (w.is_constant(), a.is_constant()) {
        (true, _) => Ok(a.scale(w.constant_term())),
        (_, true) => Ok(w.scale(a.constant_term())),
        _ => Err(wmi_core::Error::Nonlinear("collapsed weight multiplies a collapsed activation".into()).into()),
    }
}

/// Forward pass with the collapsed weights as variables.
pub fn symbolic_forward(
    mlp: &MlpSpec,
    x: &[f64],
    sample: &CollapsedSample,
    atom_budget: usize,
) -> Result<SymbolicForward> {
    mlp.check_params(&sample.weights)?;
    if x.len() != mlp.inputs() {
        return Err(CiberError::Data(format!("expected {} features, got {}", mlp.inputs(), x.len())));
    }
    let depth = mlp.num_layers();
    let mut vars = VarTable::new();
    let mut domain = BoxDomain::new();
    let mut collapsed = Vec::new();
    let mut symbolic: HashMap<usize, LinearExpr> = HashMap::new();
    let post = &sample.posterior;
    for (i, &idx) in post.indices.iter().enumerate() {
        let param = mlp
            .locate(idx)
            .ok_or_else(|| CiberError::Architecture(format!("collapsed index {idx} out of range")))?;
        if param.layer() + 2 < depth {
            return Err(wmi_core::Error::capacity("collapsed weights must lie in the last two layers", 2).into());
        }
        if post.lower[i] > post.upper[i] {
            return Err(CiberError::Data(format!("empty posterior interval for weight {idx}")));
        }
        let e = if post.lower[i] == post.upper[i] {
            LinearExpr::constant(post.lower[i].clone())
        } else {
            let v = vars.declare(&format!("w{idx}"));
            domain.set(v, post.lower[i].clone(), post.upper[i].clone());
            collapsed.push((idx, v));
            LinearExpr::var(v)
        };
        symbolic.insert(idx, e);
    }
    let param = |idx: usize| -> Result<LinearExpr> {
        match symbolic.get(&idx) {
            Some(e) => Ok(e.clone()),
            None => Ok(LinearExpr::constant(from_f64(sample.weights[idx])?)),
        }
    };

    let mut acts: Vec<LinearExpr> = x
        .iter()
        .map(|&v| from_f64(v).map(LinearExpr::constant))
        .collect::<wmi_core::Result<_>>()?;
    // Preactivations of the last hidden layer that depend on the collapsed weights.
    let mut gated: Vec<(usize, LinearExpr)> = Vec::new();
    for l in 0..depth - 1 {
        let mut next = Vec::with_capacity(mlp.widths[l + 1]);
        for j in 0..mlp.widths[l + 1] {
            let mut z = param(mlp.bias_index(l, j))?;
            for (k, a) in acts.iter().enumerate() {
                z = z + mul(&param(mlp.weight_index(l, j, k))?, a)?;
            }
            if z.is_constant() {
                let c = z.constant_term().clone();
                next.push(LinearExpr::constant(if c > BigRational::zero() { c } else { BigRational::zero() }));
            } else {
                if l + 2 != depth {
                    return Err(wmi_core::Error::capacity("collapsed weights must lie in the last two layers", 2).into());
                }
                gated.push((j, z.clone()));
                next.push(z);
            }
        }
        acts = next;
    }
    if gated.len() > atom_budget {
        return Err(wmi_core::Error::capacity("symbolic preactivations", atom_budget).into());
    }

    let last = depth - 1;
    let outputs_for = |pattern: &[bool]| -> Result<Vec<LinearExpr>> {
        let mut h = acts.clone();
        for (&(j, _), &on) in gated.iter().zip(pattern) {
            if !on {
                h[j] = LinearExpr::zero();
            }
        }
        (0..mlp.outputs())
            .map(|j| {
                let mut o = param(mlp.bias_index(last, j))?;
                for (k, a) in h.iter().enumerate() {
                    o = o + mul(&param(mlp.weight_index(last, j, k))?, a)?;
                }
                Ok(o)
            })
            .collect()
    };

    let base = domain.constraints();
    let mut cells = Vec::new();
    let mut stack: Vec<(Vec<bool>, Vec<Constraint>)> = vec![(Vec::new(), base)];
    while let Some((pattern, cs)) = stack.pop() {
        if pattern.len() == gated.len() {
            let atoms = pattern
                .iter()
                .zip(&gated)
                .map(|(&on, (_, z))| side(z, on))
                .collect();
            let outputs = outputs_for(&pattern)?;
            cells.push(RegionCell { pattern, atoms, outputs });
            continue;
        }
        let z = &gated[pattern.len()].1;
        // push "off" first so cells come out in lexicographic order with "on" first
        for on in [false, true] {
            let mut next = cs.clone();
            next.push(if on { Constraint::le(-z.clone()) } else { Constraint::lt(z.clone()) });
            if has_interior(&next) {
                let mut p = pattern.clone();
                p.push(on);
                stack.push((p, next));
            }
        }
    }
    Ok(SymbolicForward {
        vars,
        domain,
        collapsed,
        preactivations: gated.into_iter().map(|(_, z)| z).collect(),
        cells,
    })
}

fn side(z: &LinearExpr, on: bool) -> Atom {
    if on {
        Atom::ge(z.clone(), LinearExpr::zero())
    } else {
        Atom::lt(z.clone(), LinearExpr::zero())
    }
}

/// `∫ (φ(t) − tri_α(t))² dt` for the standard normal density `φ` and the
/// symmetric triangular density on `[−α, α]`.
pub fn alpha_objective(alpha: f64) -> f64 {
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let normal_sq = 1.0 / (2.0 * std::f64::consts::PI.sqrt());
    let tri_sq = 2.0 / (3.0 * alpha);
    let half = 0.5 * alpha;
    let cross: f64 = gauss_legendre(64)
        .iter()
        .map(|&(u, w)| {
            let t = half * (u + 1.0);
            w * half * phi(t) * (1.0 / alpha - t / (alpha * alpha))
        })
        .sum();
    normal_sq - 4.0 * cross + tri_sq
}

fn alpha_slope(alpha: f64) -> f64 {
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let half = 0.5 * alpha;
    let inner: f64 = gauss_legendre(64)
        .iter()
        .map(|&(u, w)| {
            let t = half * (u + 1.0);
            w * half * phi(t) * (2.0 * t / alpha.powi(3) - 1.0 / (alpha * alpha))
        })
        .sum();
    -4.0 * inner - 2.0 / (3.0 * alpha * alpha)
}

/// Minimizer of [`alpha_objective`] on `[1, 4]`, unrounded. Golden-section
/// search brackets it; bisection on the derivative then resolves the last
/// digits, which the flat objective cannot distinguish in double precision.
pub fn alpha_f64() -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1.0f64, 4.0f64);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (alpha_objective(c), alpha_objective(d));
    while b - a > 1e-6 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = alpha_objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = alpha_objective(d);
        }
    }
    let (mut lo, mut hi) = (a - 1e-6, b + 1e-6);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if alpha_slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Half-width factor of the triangular predictive, to 10 significant digits.
pub fn derive_alpha() -> BigRational {
    static ALPHA: OnceLock<BigRational> = OnceLock::new();
    ALPHA
        .get_or_init(|| rationalize(alpha_f64(), 10).expect("finite"))
        .clone()
}

/// `r = α·√σ²`, rounded to 12 significant digits.
pub fn half_width(alpha: &BigRational, sigma2: f64) -> Result<BigRational> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(CiberError::Data(format!("predictive variance must be positive, got {sigma2}")));
    }
    Ok(rationalize(to_f64(alpha) * sigma2.sqrt(), 12)?)
}

/// Cubic `c` with `c(−d) = 0` and `c(d) = 1` fitted to the sigmoid on `[−d, d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmoidCubic {
    pub d: BigRational,
    /// Coefficients of `1, t, t², t³`.
    pub coeffs: [BigRational; 4],
    /// Largest `|c(t) − σ(t)|` on `[−d, d]`.
    pub max_error: f64,
}

impl SigmoidCubic {
    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + to_f64(c))
    }

    pub fn eval_exact(&self, t: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * t + c)
    }

    /// The cubic as a polynomial in `v`.
    pub fn poly(&self, v: Var) -> Polynomial {
        Polynomial::from_univariate(v, &self.coeffs)
    }

    /// `c(f)` for an affine `f`.
    pub fn compose(&self, f: &LinearExpr) -> Polynomial {
        let base = Polynomial::from_linear(f);
        let mut acc = Polynomial::zero();
        let mut power = Polynomial::one();
        for c in &self.coeffs {
            acc = acc + power.scale(c);
            power = &power * &base;
        }
        acc
    }
}

/// Least-squares fit of `σ(t) − 1/2` on `[−d, d]` over the odd cubics that
/// satisfy the endpoint constraints: `c(t) = (t + d)/(2d) + q·t·(t² − d²)`.
pub fn fit_sigmoid_cubic(d: &BigRational) -> Result<SigmoidCubic> {
    if *d <= BigRational::zero() {
        return Err(CiberError::Data("threshold must be positive".into()));
    }
    let df = to_f64(d);
    let (mut num, mut den) = (0.0, 0.0);
    for &(u, w) in &gauss_legendre(96) {
        let t = df * u;
        let basis = t * (t * t - df * df);
        let resid = sigmoid(t) - 0.5 - t / (2.0 * df);
        num += w * resid * basis;
        den += w * basis * basis;
    }
    let q = rationalize(num / den, 12)?;
    let half = BigRational::new(1.into(), 2.into());
    let linear = (int(2) * d).recip() - &q * d * d;
    let mut cubic = SigmoidCubic {
        d: d.clone(),
        coeffs: [half, linear, BigRational::zero(), q],
        max_error: 0.0,
    };
    let n = 20_000;
    cubic.max_error = (0..=n)
        .map(|i| {
            let t = -df + 2.0 * df * i as f64 / n as f64;
            (cubic.eval(t) - sigmoid(t)).abs()
        })
        .fold(0.0, f64::max);
    Ok(cubic)
}

/// Triangular predictive encoding of a regression output.
#[derive(Debug, Clone)]
pub struct RegressionEncoding {
    pub fragments: Vec<WmiProblem>,
    pub y: Var,
    pub r: BigRational,
}

/// One fragment per cell: `Δ = cell ∧ |Y − f| ≤ r`, with weights `1/vol` on
/// `true`, `1/r − (Y − f)/r²` on `Y ≥ f` and `1/r − (f − Y)/r²` on `Y < f`.
/// `output` selects the network output used as the mean.
pub fn encode_predictive_regression(
    sf: &SymbolicForward,
    output: usize,
    sigma2: f64,
    alpha: &BigRational,
) -> Result<RegressionEncoding> {
    if *alpha <= BigRational::zero() {
        return Err(CiberError::Data("alpha must be positive".into()));
    }
    let r = half_width(alpha, sigma2)?;
    let mut vars = sf.vars.clone();
    let y = vars.declare("y");
    let yv = LinearExpr::var(y);
    let (mut lo, mut hi): (Option<BigRational>, Option<BigRational>) = (None, None);
    for c in &sf.cells {
        let (l, h) = sf.domain.range_of(&c.outputs[output])?;
        lo = Some(lo.map_or(l.clone(), |m| m.min(l)));
        hi = Some(hi.map_or(h.clone(), |m| m.max(h)));
    }
    let (lo, hi) = (lo.unwrap_or_else(BigRational::zero), hi.unwrap_or_else(BigRational::zero));
    let mut domain = sf.domain.clone();
    domain.set(y, lo - &r, hi + &r);
    let inv_r = r.recip();
    let inv_r2 = &inv_r * &inv_r;
    let density = sf.density();
    let fragments = sf
        .cells
        .iter()
        .map(|c| {
            let f = &c.outputs[output];
            let resid = yv.clone() - f.clone();
            let rc = LinearExpr::constant(r.clone());
            let mut parts: Vec<Formula> = c.atoms.iter().cloned().map(Formula::atom).collect();
            parts.push(Formula::atom(Atom::le(resid.clone(), rc.clone())));
            parts.push(Formula::atom(Atom::ge(resid.clone(), -rc)));
            let above = Polynomial::constant(inv_r.clone()) - Polynomial::from_linear(&resid.scale(&inv_r2));
            let below = Polynomial::constant(inv_r.clone()) + Polynomial::from_linear(&resid.scale(&inv_r2));
            WmiProblem::new(
                vars.clone(),
                Formula::and(parts),
                vec![
                    Weight::global(Polynomial::constant(density.clone())),
                    Weight::new(Literal::atom(Atom::ge(yv.clone(), f.clone())), above),
                    Weight::new(Literal::atom(Atom::lt(yv.clone(), f.clone())), below),
                ],
                domain.clone(),
            )
        })
        .collect();
    Ok(RegressionEncoding { fragments, y, r })
}

/// One fragment per cell for logit `output`: `Δ = cell ∧ f ≥ −d`, weights
/// `1/vol` on `true`, `c(f)` on `f ≤ d` and `1` on `f > d`.
pub fn encode_predictive_classification(
    sf: &SymbolicForward,
    output: usize,
    cubic: &SigmoidCubic,
) -> Vec<WmiProblem> {
    let d = LinearExpr::constant(cubic.d.clone());
    let density = sf.density();
    sf.cells
        .iter()
        .map(|c| {
            let f = &c.outputs[output];
            let mut parts: Vec<Formula> = c.atoms.iter().cloned().map(Formula::atom).collect();
            parts.push(Formula::atom(Atom::ge(f.clone(), -d.clone())));
            WmiProblem::new(
                sf.vars.clone(),
                Formula::and(parts),
                vec![
                    Weight::global(Polynomial::constant(density.clone())),
                    Weight::new(Literal::atom(Atom::le(f.clone(), d.clone())), cubic.compose(f)),
                    Weight::new(Literal::atom(Atom::gt(f.clone(), d.clone())), Polynomial::one()),
                ],
                sf.domain.clone(),
            )
        })
        .collect()
}

mod rational_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use wmi_core::BigRational;

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| x.to_string()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|t| wmi_core::rational::parse(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::Head;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use wmi_core::rational::ratio;
    use wmi_core::wmi::Solver;

    fn example1() -> (MlpSpec, CollapsedSample) {
        // f(x) = relu(w·x), the output layer fixed to the identity
        let mlp = MlpSpec::new(vec![1, 1, 1], Head::Homoscedastic { variance: 1.0 }).unwrap();
        let post = encode_posterior(&[vec![-3.0, 0.0, 1.0, 0.0], vec![3.0, 0.0, 1.0, 0.0]], &[0], 0.0).unwrap();
        (mlp, CollapsedSample::new(vec![0.0, 0.0, 1.0, 0.0], post))
    }

    #[test]
    fn example1_cells() {
        let (mlp, s) = example1();
        assert_eq!(s.posterior.lower, vec![int(-3)]);
        assert_eq!(s.posterior.upper, vec![int(3)]);
        let sf = symbolic_forward(&mlp, &[1.0], &s, DEFAULT_ATOM_BUDGET).unwrap();
        assert_eq!(sf.preactivations.len(), 1);
        assert_eq!(sf.cells.len(), 2);
        let w = sf.collapsed[0].1;
        let on = sf.cells.iter().find(|c| c.pattern == [true]).unwrap();
        let off = sf.cells.iter().find(|c| c.pattern == [false]).unwrap();
        assert_eq!(on.outputs[0], LinearExpr::var(w));
        assert_eq!(off.outputs[0], LinearExpr::zero());
    }

    #[test]
    fn last_layer_is_affine() {
        let mlp = MlpSpec::new(vec![2, 3, 1], Head::Homoscedastic { variance: 1.0 }).unwrap();
        let w: Vec<f64> = (0..mlp.num_params()).map(|i| i as f64 / 7.0 - 0.4).collect();
        let idx: Vec<usize> = (mlp.layer_offset(1)..mlp.num_params()).collect();
        let post = encode_posterior(&[w.clone(), w.iter().map(|v| v + 0.5).collect()], &idx, 0.0).unwrap();
        let sf = symbolic_forward(&mlp, &[0.3, -0.2], &CollapsedSample::new(w, post), 4).unwrap();
        assert!(sf.preactivations.is_empty());
        assert_eq!(sf.cells.len(), 1);
        assert_eq!(sf.collapsed.len(), 4);
    }

    #[test]
    fn earlier_layers_are_rejected() {
        let mlp = MlpSpec::new(vec![2, 3, 3, 1], Head::Classification).unwrap();
        let w = vec![0.1; mlp.num_params()];
        let post = encode_posterior(&[w.clone(), vec![0.2; mlp.num_params()]], &[0], 0.0).unwrap();
        let err = symbolic_forward(&mlp, &[1.0, 1.0], &CollapsedSample::new(w, post), 4).unwrap_err();
        assert!(err.is_capacity());
    }

    #[test]
    fn cells_match_numeric_forward() {
        let mlp = MlpSpec::new(vec![3, 2, 2], Head::Regression).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..mlp.num_params()).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        // one weight into each hidden unit, plus a hidden bias
        let idx = vec![mlp.weight_index(0, 0, 1), mlp.weight_index(0, 1, 2), mlp.bias_index(0, 1)];
        let post = encode_posterior(&samples, &idx, 0.5).unwrap();
        let x = [0.9, -1.1, 0.7];
        let sample = CollapsedSample::new(samples[0].clone(), post.clone());
        let sf = symbolic_forward(&mlp, &x, &sample, DEFAULT_ATOM_BUDGET).unwrap();
        assert_eq!(sf.preactivations.len(), 2);
        assert!(sf.cells.len() <= 4);
        for _ in 0..100 {
            let mut w = samples[0].clone();
            let mut point = HashMap::new();
            for (i, &k) in idx.iter().enumerate() {
                let v = rng.random_range(to_f64(&post.lower[i])..to_f64(&post.upper[i]));
                w[k] = v;
                point.insert(sf.collapsed[i].1, v);
            }
            let at = |v: Var| point[&v];
            let cell = sf.locate(&at).expect("cells cover the box");
            let numeric = mlp.forward(&w, &x);
            for (o, n) in cell.outputs.iter().zip(&numeric) {
                assert!((o.eval_f64(&at) - n).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_box_is_plug_in() {
        let (mlp, s) = example1();
        let post = encode_posterior(&[vec![2.0, 0.0, 1.0, 0.0]], &[0], 0.0).unwrap();
        let s = CollapsedSample::new(s.weights, post);
        let sf = symbolic_forward(&mlp, &[1.0], &s, DEFAULT_ATOM_BUDGET).unwrap();
        assert!(sf.collapsed.is_empty());
        assert_eq!(sf.cells[0].outputs[0], LinearExpr::constant(int(2)));
        let enc = encode_predictive_regression(&sf, 0, 1.0, &int(2)).unwrap();
        let solver = Solver::default();
        for (y, expected) in [(int(2), ratio(1, 2)), (int(3), ratio(1, 4)), (int(4), int(0)), (int(0), int(0))] {
            let v = solver.conditioned(&enc.fragments[0], enc.y, &y).unwrap().value;
            assert_eq!(v.exact().unwrap(), &expected);
        }
    }

    #[test]
    fn triangular_predictive_normalizes() {
        let (mlp, s) = example1();
        let sf = symbolic_forward(&mlp, &[1.0], &s, DEFAULT_ATOM_BUDGET).unwrap();
        let enc = encode_predictive_regression(&sf, 0, 1.0, &derive_alpha()).unwrap();
        let solver = Solver::default();
        let z: BigRational = enc
            .fragments
            .iter()
            .map(|p| solver.wmi(p).unwrap().value.exact().unwrap().clone())
            .sum();
        assert_eq!(z, int(1));
    }

    #[test]
    fn alpha_is_a_local_minimum() {
        let a = to_f64(&derive_alpha());
        let f = alpha_objective(a);
        assert!(f <= alpha_objective(a - 0.01) && f <= alpha_objective(a + 0.01));
        assert_eq!(derive_alpha(), rationalize(alpha_f64(), 10).unwrap());
    }

    #[test]
    fn cubic_constraints_and_symmetry() {
        let c = fit_sigmoid_cubic(&int(4)).unwrap();
        assert_eq!(c.eval_exact(&int(-4)), int(0));
        assert_eq!(c.eval_exact(&int(4)), int(1));
        assert_eq!(c.coeffs[2], int(0));
        assert_eq!(c.coeffs[0], ratio(1, 2));
        for t in [0.5, 1.3, 2.9] {
            assert!((c.eval(t) + c.eval(-t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn classification_saturation() {
        let mlp = MlpSpec::new(vec![1, 1], Head::Classification).unwrap();
        let cubic = fit_sigmoid_cubic(&int(4)).unwrap();
        let solver = Solver::default();
        let score = |bias: f64, lo: f64, hi: f64| {
            let post = encode_posterior(&[vec![lo, bias], vec![hi, bias]], &[0], 0.0).unwrap();
            let sf = symbolic_forward(&mlp, &[1.0], &CollapsedSample::new(vec![0.0, bias], post), 4).unwrap();
            encode_predictive_classification(&sf, 0, &cubic)
                .iter()
                .map(|p| solver.wmi(p).unwrap().value.to_f64())
                .sum::<f64>()
        };
        assert_eq!(score(5.0, 0.0, 1.0), 1.0);
        assert_eq!(score(-6.0, 0.0, 1.0), 0.0);
        assert!((score(0.0, -1e-9, 1e-9) - 0.5).abs() < 1e-6);
        // box straddling the threshold mixes both branches
        let s = score(0.0, 2.0, 6.0);
        assert!(s > 0.9 && s < 1.0);
    }
}
