use std::collections::BTreeSet;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrate::{integrate_cell, IntegrateOptions, DEFAULT_MAX_PIECES};
use crate::integrate::lattice::DEFAULT_RESOLUTION;
use crate::linear::Var;
use crate::lra::{enumerate_cells, Atom, BoxDomain, Cell, CellBudget, CellDecomposition};
use crate::poly::Polynomial;
use crate::rational;
use crate::wmi::fastpath;
use crate::wmi::problem::{Literal, WmiProblem};

/// Result of a query: exact unless the lattice fallback was needed.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Exact(BigRational),
    Approx(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => rational::to_f64(q),
            Value::Approx(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Value::Exact(q) => Some(q),
            Value::Approx(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Value::Exact(q) => q.is_zero(),
            Value::Approx(x) => *x == 0.0,
        }
    }

    pub fn scale(&self, k: &BigRational) -> Value {
        match self {
            Value::Exact(q) => Value::Exact(q * k),
            Value::Approx(x) => Value::Approx(x * rational::to_f64(k)),
        }
    }

    pub fn checked_div(&self, den: &Value) -> Result<Value> {
        if den.is_zero() {
            return Err(Error::DivisionByZero("partition function"));
        }
        Ok(match (self, den) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a / b),
            _ => Value::Approx(self.to_f64() / den.to_f64()),
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(q) => write!(f, "{q} ≈ {}", rational::decimal(q, 15)),
            Value::Approx(x) => write!(f, "≈ {x:.15e}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastPath {
    /// Use the linear-functional path when it provably applies to at least two box variables.
    Auto,
    Never,
    /// Fail unless the linear-functional path applies.
    Always,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Path {
    Generic,
    FastExact,
    FastLattice,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub fast_path: FastPath,
    pub cells: CellBudget,
    pub integrate: IntegrateOptions,
    pub max_spline_pieces: usize,
    /// Permit the floating-point lattice when the exact spline is over budget.
    pub allow_approx: bool,
    pub lattice_resolution: usize,
    pub parallel: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            fast_path: FastPath::Auto,
            cells: CellBudget::default(),
            integrate: IntegrateOptions::default(),
            max_spline_pieces: DEFAULT_MAX_PIECES,
            allow_approx: true,
            lattice_resolution: DEFAULT_RESOLUTION,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub value: Value,
    pub path: Path,
    pub cells: usize,
    pub splits: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Solver {
    pub opts: SolverOptions,
}

impl Solver {
    pub fn new(opts: SolverOptions) -> Self {
        Solver { opts }
    }

    /// `WMI(Δ, 𝒲)`.
    pub fn wmi(&self, p: &WmiProblem) -> Result<Solution> {
        p.validate()?;
        if self.opts.fast_path != FastPath::Never {
            if let Some(s) = fastpath::solve(self, p)? {
                return Ok(s);
            }
            if self.opts.fast_path == FastPath::Always {
                return Err(Error::Invalid("weights do not factor through one linear functional".into()));
            }
        }
        self.generic(p)
    }

    /// `WMI(Δ ∧ v = value, 𝒲)`, by substitution.
    pub fn conditioned(&self, p: &WmiProblem, v: Var, value: &BigRational) -> Result<Solution> {
        p.validate()?;
        if p.domain.get(v).is_none() {
            return Err(Error::UnknownVariable(p.vars.name(v).to_string()));
        }
        match p.condition(v, value) {
            Some(q) => self.wmi(&q),
            None => Ok(Solution {
                value: Value::Exact(BigRational::zero()),
                path: Path::Generic,
                cells: 0,
                splits: 0,
            }),
        }
    }

    /// `WMI(Δ, 𝒲 ∪ {true ↦ v}) / WMI(Δ, 𝒲)`.
    pub fn expectation(&self, p: &WmiProblem, v: Var) -> Result<Value> {
        p.validate()?;
        if p.domain.get(v).is_none() {
            return Err(Error::UnknownVariable(p.vars.name(v).to_string()));
        }
        let z = self.wmi(p)?.value;
        let num = self
            .wmi(&p.clone().with_weight(crate::wmi::Weight::global(Polynomial::var(v))))?
            .value;
        num.checked_div(&z)
    }

    pub(crate) fn generic(&self, p: &WmiProblem) -> Result<Solution> {
        let (active, rest_volume) = split_domain(p);
        let extra = literal_atoms(p);
        let dec = enumerate_cells(&p.delta, &extra, &active, self.opts.cells)?;
        let integrate = |cell: &Cell| -> Result<(BigRational, usize)> {
            let integrand = cell_integrand(p, &dec, cell);
            if integrand.is_zero() {
                return Ok((BigRational::zero(), 0));
            }
            let r = integrate_cell(&integrand, cell, &self.opts.integrate)?;
            Ok((r.value, r.cells_split))
        };
        let parts: Vec<Result<(BigRational, usize)>> = if self.opts.parallel && dec.cells.len() > 1 {
            dec.cells.par_iter().map(integrate).collect()
        } else {
            dec.cells.iter().map(integrate).collect()
        };
        let mut total = BigRational::zero();
        let mut splits = 0;
        for part in parts {
            let (v, s) = part?;
            total += v;
            splits += s;
        }
        Ok(Solution {
            value: Value::Exact(total * rest_volume),
            path: Path::Generic,
            cells: dec.cells.len(),
            splits,
        })
    }
}

/// Variables mentioned by `Δ`, a literal or a weight.
pub(crate) fn active_vars(p: &WmiProblem) -> BTreeSet<Var> {
    let mut vars: BTreeSet<Var> = p.delta.vars().into_iter().collect();
    for w in &p.weights {
        if let Literal::Atom(a) = &w.literal {
            vars.extend(a.expr().vars());
        }
        vars.extend(w.poly.vars());
    }
    vars
}

/// The box restricted to active variables, and the volume of the rest.
pub(crate) fn split_domain(p: &WmiProblem) -> (BoxDomain, BigRational) {
    let active = active_vars(p);
    let mut inner = BoxDomain::new();
    let mut volume = BigRational::one();
    for (v, l, h) in p.domain.iter() {
        if active.contains(&v) {
            inner.set(v, l.clone(), h.clone());
        } else {
            volume *= h - l;
        }
    }
    (inner, volume)
}

pub(crate) fn literal_atoms(p: &WmiProblem) -> Vec<Atom> {
    let mut out: Vec<Atom> = Vec::new();
    for w in &p.weights {
        if let Literal::Atom(a) = &w.literal {
            if !a.is_constant() && !out.contains(a) {
                out.push(a.clone());
            }
        }
    }
    out
}

/// Product of the weights whose literal holds on `cell`.
pub(crate) fn cell_integrand(p: &WmiProblem, dec: &CellDecomposition, cell: &Cell) -> Polynomial {
    let mut acc = Polynomial::one();
    for w in &p.weights {
        let active = match &w.literal {
            Literal::True => true,
            Literal::Atom(a) => match a.constant_truth() {
                Some(b) => b,
                None => dec.truth(cell, a).unwrap_or(false),
            },
        };
        if active {
            acc = &acc * &w.poly;
        }
    }
    acc
}

/// `WMI(Δ, 𝒲)` with default options.
pub fn wmi(p: &WmiProblem) -> Result<Value> {
    Solver::default().wmi(p).map(|s| s.value)
}

/// `WMI(Δ ∧ v = value, 𝒲)` with default options.
pub fn wmi_conditioned(p: &WmiProblem, v: Var, value: &BigRational) -> Result<Value> {
    Solver::default().conditioned(p, v, value).map(|s| s.value)
}

/// `E[v]` under the normalized weight, with default options.
pub fn wmi_expectation(p: &WmiProblem, v: Var) -> Result<Value> {
    Solver::default().expectation(p, v)
}
