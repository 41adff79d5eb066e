//! Sparse multivariate polynomials over exact rationals.
//!
//! A [`Polynomial`] is a map from [`Monomial`] to a nonzero coefficient. Both
//! maps are kept canonical (sorted, no zero entries) so structural equality is
//! polynomial equality.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linear::{LinearExpr, Var, VarTable};
use crate::rational;

/// Power product `Π var^exp`, sorted by variable, exponents strictly positive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<(Var, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: Var) -> Self {
        Monomial(vec![(v, 1)])
    }

    pub fn new(powers: impl IntoIterator<Item = (Var, u32)>) -> Self {
        let mut map: BTreeMap<Var, u32> = BTreeMap::new();
        for (v, e) in powers {
            *map.entry(v).or_insert(0) += e;
        }
        Monomial(map.into_iter().filter(|(_, e)| *e > 0).collect())
    }

    pub fn powers(&self) -> &[(Var, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.0
            .iter()
            .find(|(w, _)| *w == v)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, b) = (self.0[i], other.0[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => {
                    out.push(a);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Sets the exponent of `v` (removing it when `e == 0`).
    fn with_exponent(&self, v: Var, e: u32) -> Monomial {
        let mut powers: Vec<(Var, u32)> = self.0.iter().copied().filter(|(w, _)| *w != v).collect();
        if e > 0 {
            powers.push((v, e));
            powers.sort_by_key(|(w, _)| *w);
        }
        Monomial(powers)
    }
}

/// Sparse polynomial with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, BigRational>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::monomial(Monomial::one(), c)
    }

    pub fn var(v: Var) -> Self {
        Self::monomial(Monomial::var(v), BigRational::one())
    }

    pub fn monomial(m: Monomial, c: BigRational) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, BigRational)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn from_linear(e: &LinearExpr) -> Self {
        let mut p = Self::constant(e.constant_term().clone());
        for (v, c) in e.coeffs() {
            p.add_term(Monomial::var(*v), c.clone());
        }
        p
    }

    /// The affine expression equal to this polynomial, if its degree is at most one.
    pub fn to_linear(&self) -> Option<LinearExpr> {
        let mut e = LinearExpr::zero();
        for (m, c) in &self.terms {
            match m.powers() {
                [] => e.add_constant(c),
                [(v, 1)] => e.add_term(*v, c.clone()),
                _ => return None,
            }
        }
        Some(e)
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value if the polynomial is constant.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms
            .keys()
            .flat_map(|m| m.powers().iter().map(|(v, _)| *v))
            .collect()
    }

    pub fn mentions(&self, v: Var) -> bool {
        self.terms.keys().any(|m| m.exponent(v) > 0)
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        Polynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Antiderivative in `v` with zero constant of integration.
    pub fn antiderivative(&self, v: Var) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v) + 1;
            out.add_term(m.with_exponent(v, e), c / rational::int(e as i64));
        }
        out
    }

    pub fn derivative(&self, v: Var) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e > 0 {
                out.add_term(m.with_exponent(v, e - 1), c * rational::int(e as i64));
            }
        }
        out
    }

    /// `p` with `v := e`. `e` must not mention `v`.
    pub fn substitute_linear(&self, v: Var, e: &LinearExpr) -> Self {
        debug_assert!(!e.mentions(v), "substitution would be recursive");
        let max_e = self.degree_in(v);
        if max_e == 0 {
            return self.clone();
        }
        let base = Self::from_linear(e);
        let mut powers = vec![Self::one()];
        for k in 1..=max_e as usize {
            let next = &powers[k - 1] * &base;
            powers.push(next);
        }
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let k = m.exponent(v);
            let rest = Self::monomial(m.with_exponent(v, 0), c.clone());
            if k == 0 {
                out = out + rest;
            } else {
                out = out + &rest * &powers[k as usize];
            }
        }
        out
    }

    pub fn substitute_value(&self, v: Var, value: &BigRational) -> Self {
        if !self.mentions(v) {
            return self.clone();
        }
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let k = m.exponent(v);
            out.add_term(m.with_exponent(v, 0), c * rational::pow(value, k));
        }
        out
    }

    /// Exact evaluation; every variable of `p` must be assigned.
    pub fn eval(&self, assignment: &BTreeMap<Var, BigRational>) -> Result<BigRational> {
        self.eval_with(&|v| assignment.get(&v).cloned(), None)
    }

    pub fn eval_with(&self, assignment: &dyn Fn(Var) -> Option<BigRational>, names: Option<&VarTable>) -> Result<BigRational> {
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in m.powers() {
                let x = assignment(*v).ok_or_else(|| {
                    Error::MissingVariable(names.map(|n| n.name(*v).to_string()).unwrap_or_else(|| v.to_string()))
                })?;
                t *= rational::pow(&x, *e);
            }
            acc += t;
        }
        Ok(acc)
    }

    pub fn eval_f64(&self, x: &dyn Fn(Var) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                m.powers()
                    .iter()
                    .fold(rational::to_f64(c), |acc, (v, e)| acc * x(*v).powi(*e as i32))
            })
            .sum()
    }

    /// Coefficients of a polynomial in the single variable `v`, lowest degree
    /// first. Fails if any other variable occurs.
    pub fn univariate_coeffs(&self, v: Var) -> Option<Vec<BigRational>> {
        let mut out = vec![BigRational::zero(); self.degree_in(v) as usize + 1];
        for (m, c) in &self.terms {
            if m.powers().iter().any(|(w, _)| *w != v) {
                return None;
            }
            out[m.exponent(v) as usize] = c.clone();
        }
        Some(out)
    }

    pub fn from_univariate(v: Var, coeffs: &[BigRational]) -> Self {
        Self::from_terms(
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| (Monomial::new([(v, k as u32)]), c.clone())),
        )
    }

    pub fn display<'a>(&'a self, names: &'a VarTable) -> DisplayPoly<'a> {
        DisplayPoly { poly: self, names: Some(names) }
    }
}

impl Add for Polynomial {
    type Output = Polynomial;
    fn add(mut self, rhs: Polynomial) -> Polynomial {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
        self
    }
}

impl Add<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.clone() + rhs.clone()
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: Polynomial) -> Polynomial {
        self + (-rhs)
    }
}

impl Sub<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.clone() - rhs.clone()
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect(),
        }
    }
}

impl Mul<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl Mul for Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: Polynomial) -> Polynomial {
        &self * &rhs
    }
}

pub struct DisplayPoly<'a> {
    poly: &'a Polynomial,
    names: Option<&'a VarTable>,
}

impl fmt::Display for DisplayPoly<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        // highest degree first reads more naturally
        let mut terms: Vec<_> = self.poly.terms.iter().collect();
        terms.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()).then(a.0.cmp(b.0)));
        for (i, (m, c)) in terms.into_iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            let body: Vec<String> = m
                .powers()
                .iter()
                .map(|(v, e)| {
                    let name = match self.names {
                        Some(n) => n.name(*v).to_string(),
                        None => v.to_string(),
                    };
                    if *e == 1 {
                        name
                    } else {
                        format!("{name}^{e}")
                    }
                })
                .collect();
            if body.is_empty() {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "{}", body.join("*"))?;
            } else {
                write!(f, "{c}*{}", body.join("*"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        DisplayPoly { poly: self, names: None }.fmt(f)
    }
}
