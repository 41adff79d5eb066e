//! Brute-force reference estimators for weighted model integrals.
//!
//! Both estimators evaluate `[x ⊨ Δ] · Π_{ℓ : x ⊨ ℓ} w_ℓ(x)` pointwise with a
//! floating-point evaluator of their own; nothing here touches cell
//! enumeration or symbolic integration.

pub mod gen;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use wmi_core::lra::{Atom, Formula, Relation};
use wmi_core::rational::to_f64;
use wmi_core::wmi::{Literal, WmiProblem};
use wmi_core::{Error, Polynomial, Result, Var};

/// Monte Carlo estimate of a weighted model integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Distance from `value` in standard errors.
    pub fn z_score(&self, value: f64) -> f64 {
        if self.std_error == 0.0 {
            if (self.mean - value).abs() <= 1e-12 * value.abs().max(1.0) {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - value).abs() / self.std_error
        }
    }
}

const CHUNK: u64 = 1 << 16;

/// Uniform sampling over the box. Chunk `i` draws from stream `i` of a
/// ChaCha8 generator keyed by `seed`, so results do not depend on threading.
pub fn mc_wmi(p: &WmiProblem, n: u64, seed: u64) -> McEstimate {
    let n = n.max(1);
    let eval = Evaluator::new(p);
    let chunks = n.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = CHUNK.min(n - c * CHUNK);
            let mut x = vec![0.0; eval.width];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                for (slot, (lo, hi)) in x.iter_mut().zip(&eval.bounds) {
                    *slot = lo + (hi - lo) * rng.random::<f64>();
                }
                let f = eval.integrand(&x);
                s += f;
                s2 += f * f;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = partial.iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let nf = n as f64;
    let mean = s / nf;
    let var = if n > 1 { ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
    McEstimate {
        mean: eval.volume * mean,
        std_error: eval.volume * (var / nf).sqrt(),
        n,
        seed,
    }
}

/// Midpoint rule on a `resolution^d` tensor grid, `d ≤ 3`.
pub fn grid_wmi(p: &WmiProblem, resolution: usize) -> Result<f64> {
    let eval = Evaluator::new(p);
    let d = eval.bounds.len();
    if d > 3 {
        return Err(Error::capacity("grid oracle dimensions", 3));
    }
    let r = resolution.max(1);
    let total = r.pow(d as u32);
    let steps: Vec<f64> = eval.bounds.iter().map(|(lo, hi)| (hi - lo) / r as f64).collect();
    let cell: f64 = steps.iter().product();
    let sum: f64 = (0..total)
        .into_par_iter()
        .with_min_len(4096)
        .map(|mut k| {
            let mut x = vec![0.0; eval.width];
            for (i, (lo, _)) in eval.bounds.iter().enumerate() {
                x[i] = lo + steps[i] * ((k % r) as f64 + 0.5);
                k /= r;
            }
            eval.integrand(&x)
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(sum * cell)
}

/// Flattened floating-point view of a problem.
struct Evaluator<'a> {
    problem: &'a WmiProblem,
    slots: Vec<Var>,
    bounds: Vec<(f64, f64)>,
    width: usize,
    volume: f64,
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a WmiProblem) -> Self {
        let mut slots = Vec::new();
        let mut bounds = Vec::new();
        for (v, lo, hi) in problem.domain.iter() {
            slots.push(v);
            bounds.push((to_f64(lo), to_f64(hi)));
        }
        let volume = bounds.iter().map(|(l, h)| h - l).product();
        Evaluator {
            problem,
            width: slots.len(),
            slots,
            bounds,
            volume,
        }
    }

    fn value_of(&self, x: &[f64], v: Var) -> f64 {
        match self.slots.iter().position(|s| *s == v) {
            Some(i) => x[i],
            None => f64::NAN,
        }
    }

    fn atom(&self, a: &Atom, x: &[f64]) -> bool {
        let e = a.expr();
        let mut acc = to_f64(e.constant_term());
        for (v, c) in e.coeffs() {
            acc += to_f64(c) * self.value_of(x, *v);
        }
        match a.relation() {
            Relation::Le => acc <= 0.0,
            Relation::Lt => acc < 0.0,
            Relation::Eq => acc == 0.0,
        }
    }

    fn formula(&self, f: &Formula, x: &[f64]) -> bool {
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => self.atom(a, x),
            Formula::Not(g) => !self.formula(g, x),
            Formula::And(gs) => gs.iter().all(|g| self.formula(g, x)),
            Formula::Or(gs) => gs.iter().any(|g| self.formula(g, x)),
            Formula::Implies(a, b) => !self.formula(a, x) || self.formula(b, x),
        }
    }

    fn poly(&self, p: &Polynomial, x: &[f64]) -> f64 {
        p.terms()
            .map(|(m, c)| {
                m.powers()
                    .iter()
                    .fold(to_f64(c), |acc, (v, e)| acc * self.value_of(x, *v).powi(*e as i32))
            })
            .sum()
    }

    fn integrand(&self, x: &[f64]) -> f64 {
        if !self.formula(&self.problem.delta, x) {
            return 0.0;
        }
        let mut w = 1.0;
        for weight in &self.problem.weights {
            let holds = match &weight.literal {
                Literal::True => true,
                Literal::Atom(a) => self.atom(a, x),
            };
            if holds {
                w *= self.poly(&weight.poly, x);
            }
        }
        w
    }
}
