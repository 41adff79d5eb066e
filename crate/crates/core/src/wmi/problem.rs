use std::fmt;

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::linear::{LinearExpr, Var, VarTable};
use crate::lra::{Atom, BoxDomain, Formula};
use crate::poly::Polynomial;

/// Condition under which a weight factor is active.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    True,
    Atom(Atom),
}

impl Literal {
    /// Accepts `true`, an atom, or a negated inequality atom.
    pub fn from_formula(f: &Formula) -> Result<Literal> {
        match f {
            Formula::True => Ok(Literal::True),
            Formula::Atom(a) => Ok(Literal::atom(a.clone())),
            Formula::Not(inner) => match &**inner {
                Formula::Atom(a) => a
                    .negate()
                    .map(Literal::atom)
                    .ok_or_else(|| Error::Invalid("negated equality is not a literal".into())),
                _ => Err(Error::Invalid("literal must be `true`, an atom or a negated atom".into())),
            },
            _ => Err(Error::Invalid("literal must be `true`, an atom or a negated atom".into())),
        }
    }

    pub fn atom(a: Atom) -> Literal {
        Literal::Atom(a)
    }

    fn substitute(&self, v: Var, value: &BigRational) -> Literal {
        match self {
            Literal::True => Literal::True,
            Literal::Atom(a) => Literal::Atom(a.substitute_value(v, value)),
        }
    }

    fn substitute_linear(&self, v: Var, e: &LinearExpr) -> Literal {
        match self {
            Literal::True => Literal::True,
            Literal::Atom(a) => Literal::Atom(a.substitute(v, e)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    pub literal: Literal,
    pub poly: Polynomial,
}

impl Weight {
    pub fn new(literal: Literal, poly: Polynomial) -> Self {
        Weight { literal, poly }
    }

    pub fn global(poly: Polynomial) -> Self {
        Weight {
            literal: Literal::True,
            poly,
        }
    }
}

/// The pair `(Δ, 𝒲)` over a bounded box.
#[derive(Debug, Clone, PartialEq)]
pub struct WmiProblem {
    pub vars: VarTable,
    pub delta: Formula,
    pub weights: Vec<Weight>,
    pub domain: BoxDomain,
}

impl WmiProblem {
    pub fn new(vars: VarTable, delta: Formula, weights: Vec<Weight>, domain: BoxDomain) -> Self {
        WmiProblem {
            vars,
            delta,
            weights,
            domain,
        }
    }

    /// Checks that every mentioned variable is bounded by the box.
    pub fn validate(&self) -> Result<()> {
        self.domain.validate(Some(&self.vars))?;
        let mut mentioned = self.delta.vars();
        for w in &self.weights {
            if let Literal::Atom(a) = &w.literal {
                if a.is_equality() && !a.is_constant() {
                    return Err(Error::EqualityInCell(a.display(&self.vars).to_string()));
                }
                mentioned.extend(a.expr().vars());
            }
            mentioned.extend(w.poly.vars());
        }
        for v in mentioned {
            if self.domain.get(v).is_none() {
                return Err(Error::Unbounded(self.vars.name(v).to_string()));
            }
        }
        Ok(())
    }

    pub fn with_weight(mut self, w: Weight) -> Self {
        self.weights.push(w);
        self
    }

    /// Replaces `v` by `value` everywhere and drops it from the box. Returns
    /// `None` if `value` lies outside `v`'s box interval.
    pub fn condition(&self, v: Var, value: &BigRational) -> Option<WmiProblem> {
        let mut domain = self.domain.clone();
        if let Some((l, h)) = domain.remove(v) {
            if value < &l || value > &h {
                return None;
            }
        }
        Some(WmiProblem {
            vars: self.vars.clone(),
            delta: self.delta.substitute_value(v, value).simplify(),
            weights: self
                .weights
                .iter()
                .map(|w| Weight::new(w.literal.substitute(v, value), w.poly.substitute_value(v, value)))
                .collect(),
            domain,
        })
    }

    /// Replaces `v` by an affine expression in the other variables.
    pub fn substitute(&self, v: Var, e: &LinearExpr) -> WmiProblem {
        WmiProblem {
            vars: self.vars.clone(),
            delta: self.delta.substitute(v, e),
            weights: self
                .weights
                .iter()
                .map(|w| Weight::new(w.literal.substitute_linear(v, e), w.poly.substitute_linear(v, e)))
                .collect(),
            domain: self.domain.clone(),
        }
    }
}

impl fmt::Display for WmiProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (v, l, h) in self.domain.iter() {
            writeln!(f, "{} ∈ [{l}, {h}]", self.vars.name(v))?;
        }
        writeln!(f, "Δ = {}", self.delta.display(&self.vars))?;
        for w in &self.weights {
            let lit = match &w.literal {
                Literal::True => "true".to_string(),
                Literal::Atom(a) => a.display(&self.vars).to_string(),
            };
            writeln!(f, "w[{lit}] = {}", w.poly.display(&self.vars))?;
        }
        Ok(())
    }
}
