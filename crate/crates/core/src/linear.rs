//! Variables, the symbol table, and affine expressions `c·x + b`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense integer id of a real-valued variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// Names for variable ids. Names never enter arithmetic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarTable {
    names: Vec<String>,
    ids: HashMap<String, Var>,
}

impl VarTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `name`, declaring it if necessary.
    pub fn declare(&mut self, name: &str) -> Var {
        if let Some(&v) = self.ids.get(name) {
            return v;
        }
        let v = Var(self.names.len() as u32);
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), v);
        v
    }

    pub fn lookup(&self, name: &str) -> Option<Var> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, v: Var) -> &str {
        self.names.get(v.index()).map(String::as_str).unwrap_or("?")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        (0..self.names.len() as u32).map(Var)
    }
}

/// Affine expression `Σ coeff·var + constant` with no zero coefficients stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearExpr {
    coeffs: BTreeMap<Var, BigRational>,
    constant: BigRational,
}

impl Default for LinearExpr {
    fn default() -> Self {
        Self::zero()
    }
}

impl LinearExpr {
    pub fn zero() -> Self {
        LinearExpr {
            coeffs: BTreeMap::new(),
            constant: BigRational::zero(),
        }
    }

    pub fn constant(c: BigRational) -> Self {
        LinearExpr {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(v: Var) -> Self {
        Self::term(v, BigRational::one())
    }

    pub fn term(v: Var, c: BigRational) -> Self {
        let mut e = Self::zero();
        e.add_term(v, c);
        e
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Var, BigRational)>, constant: BigRational) -> Self {
        let mut e = Self::constant(constant);
        for (v, c) in terms {
            e.add_term(v, c);
        }
        e
    }

    pub fn add_term(&mut self, v: Var, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(v).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&v);
        }
    }

    pub fn add_constant(&mut self, c: &BigRational) {
        self.constant += c;
    }

    pub fn coeff(&self, v: Var) -> BigRational {
        self.coeffs.get(&v).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coeffs(&self) -> &BTreeMap<Var, BigRational> {
        &self.coeffs
    }

    pub fn constant_term(&self) -> &BigRational {
        &self.constant
    }

    pub fn mentions(&self, v: Var) -> bool {
        self.coeffs.contains_key(&v)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.coeffs.keys().copied()
    }

    /// Smallest variable with a nonzero coefficient.
    pub fn leading(&self) -> Option<(Var, &BigRational)> {
        self.coeffs.iter().next().map(|(v, c)| (*v, c))
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        LinearExpr {
            coeffs: self.coeffs.iter().map(|(v, c)| (*v, c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    /// Replaces `v` by `e`.
    pub fn substitute(&self, v: Var, e: &LinearExpr) -> Self {
        let Some(c) = self.coeffs.get(&v) else {
            return self.clone();
        };
        let mut out = self.clone();
        out.coeffs.remove(&v);
        out + e.scale(c)
    }

    pub fn substitute_value(&self, v: Var, value: &BigRational) -> Self {
        self.substitute(v, &LinearExpr::constant(value.clone()))
    }

    pub fn eval(&self, assignment: &dyn Fn(Var) -> Option<BigRational>, names: Option<&VarTable>) -> Result<BigRational> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            let x = assignment(*v).ok_or_else(|| missing(*v, names))?;
            acc += c * x;
        }
        Ok(acc)
    }

    pub fn eval_map(&self, assignment: &BTreeMap<Var, BigRational>) -> Result<BigRational> {
        self.eval(&|v| assignment.get(&v).cloned(), None)
    }

    pub fn eval_f64(&self, x: &dyn Fn(Var) -> f64) -> f64 {
        let mut acc = crate::rational::to_f64(&self.constant);
        for (v, c) in &self.coeffs {
            acc += crate::rational::to_f64(c) * x(*v);
        }
        acc
    }

    /// Restriction to the variables accepted by `keep` (constant dropped).
    pub fn restrict(&self, keep: impl Fn(Var) -> bool) -> Self {
        LinearExpr {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(v, _)| keep(**v))
                .map(|(v, c)| (*v, c.clone()))
                .collect(),
            constant: BigRational::zero(),
        }
    }

    /// Divides by the absolute value of the leading coefficient so that it is ±1.
    /// Returns the normalized expression and the positive factor applied.
    pub fn normalized(&self) -> (Self, BigRational) {
        match self.leading() {
            None => (self.clone(), BigRational::one()),
            Some((_, c)) => {
                let k = c.abs().recip();
                (self.scale(&k), k)
            }
        }
    }

    /// If `self = λ·other` for some nonzero rational λ (ignoring constants), returns λ.
    pub fn ratio_to(&self, other: &LinearExpr) -> Option<BigRational> {
        if self.coeffs.len() != other.coeffs.len() || self.coeffs.is_empty() {
            return None;
        }
        let mut lambda: Option<BigRational> = None;
        for ((v1, c1), (v2, c2)) in self.coeffs.iter().zip(other.coeffs.iter()) {
            if v1 != v2 {
                return None;
            }
            let r = c1 / c2;
            match &lambda {
                None => lambda = Some(r),
                Some(l) if *l == r => {}
                Some(_) => return None,
            }
        }
        lambda
    }

    pub fn display<'a>(&'a self, names: &'a VarTable) -> DisplayExpr<'a> {
        DisplayExpr { expr: self, names }
    }
}

fn missing(v: Var, names: Option<&VarTable>) -> Error {
    Error::MissingVariable(names.map(|t| t.name(v).to_string()).unwrap_or_else(|| v.to_string()))
}

impl Add for LinearExpr {
    type Output = LinearExpr;
    fn add(mut self, rhs: LinearExpr) -> LinearExpr {
        for (v, c) in rhs.coeffs {
            self.add_term(v, c);
        }
        self.constant += rhs.constant;
        self
    }
}

impl Sub for LinearExpr {
    type Output = LinearExpr;
    fn sub(self, rhs: LinearExpr) -> LinearExpr {
        self + (-rhs)
    }
}

impl Neg for LinearExpr {
    type Output = LinearExpr;
    fn neg(self) -> LinearExpr {
        LinearExpr {
            coeffs: self.coeffs.into_iter().map(|(v, c)| (v, -c)).collect(),
            constant: -self.constant,
        }
    }
}

impl Mul<&BigRational> for LinearExpr {
    type Output = LinearExpr;
    fn mul(self, rhs: &BigRational) -> LinearExpr {
        self.scale(rhs)
    }
}

/// S-expression rendering of a linear expression.
pub struct DisplayExpr<'a> {
    expr: &'a LinearExpr,
    names: &'a VarTable,
}

impl fmt::Display for DisplayExpr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        for (v, c) in &self.expr.coeffs {
            let name = self.names.name(*v);
            if c.is_one() {
                parts.push(name.to_string());
            } else {
                parts.push(format!("(* {c} {name})"));
            }
        }
        if !self.expr.constant.is_zero() || parts.is_empty() {
            parts.push(self.expr.constant.to_string());
        }
        if parts.len() == 1 {
            write!(f, "{}", parts[0])
        } else {
            write!(f, "(+ {})", parts.join(" "))
        }
    }
}
