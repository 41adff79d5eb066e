use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;

use crate::error::Result;
use crate::linear::{LinearExpr, Var, VarTable};
use crate::lra::atom::Atom;

/// Quantifier-free LRA formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(a: Atom) -> Self {
        match a.constant_truth() {
            Some(true) => Formula::True,
            Some(false) => Formula::False,
            None => Formula::Atom(a),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Self {
        Formula::And(parts.into_iter().collect())
    }

    pub fn or(parts: impl IntoIterator<Item = Formula>) -> Self {
        Formula::Or(parts.into_iter().collect())
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// Distinct atoms in order of first occurrence. Positions index the atom table.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<Atom>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                if !out.contains(a) {
                    out.push(a.clone());
                }
            }
            Formula::Not(f) => f.collect_atoms(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_atoms(out)),
            Formula::Implies(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self.atoms().iter().flat_map(|a| a.expr().vars().collect::<Vec<_>>()).collect();
        vs.sort();
        vs.dedup();
        vs
    }

    /// Three-valued evaluation given partial truth values for atoms.
    pub fn eval3(&self, truth: &dyn Fn(&Atom) -> Option<bool>) -> Option<bool> {
        match self {
            Formula::True => Some(true),
            Formula::False => Some(false),
            Formula::Atom(a) => a.constant_truth().or_else(|| truth(a)),
            Formula::Not(f) => f.eval3(truth).map(|b| !b),
            Formula::And(fs) => {
                let mut unknown = false;
                for f in fs {
                    match f.eval3(truth) {
                        Some(false) => return Some(false),
                        None => unknown = true,
                        Some(true) => {}
                    }
                }
                if unknown {
                    None
                } else {
                    Some(true)
                }
            }
            Formula::Or(fs) => {
                let mut unknown = false;
                for f in fs {
                    match f.eval3(truth) {
                        Some(true) => return Some(true),
                        None => unknown = true,
                        Some(false) => {}
                    }
                }
                if unknown {
                    None
                } else {
                    Some(false)
                }
            }
            Formula::Implies(a, b) => match (a.eval3(truth), b.eval3(truth)) {
                (Some(false), _) | (_, Some(true)) => Some(true),
                (Some(true), Some(false)) => Some(false),
                _ => None,
            },
        }
    }

    /// Truth at a total assignment.
    pub fn satisfied_by(&self, assignment: &BTreeMap<Var, BigRational>, names: Option<&VarTable>) -> Result<bool> {
        let mut truth = BTreeMap::new();
        for a in self.atoms() {
            let x = a.expr().eval(&|v| assignment.get(&v).cloned(), names)?;
            let b = a.holds_at(&x);
            truth.insert(a, b);
        }
        Ok(self.eval3(&|a: &Atom| truth.get(a).copied()).unwrap_or(false))
    }

    pub fn eval_f64(&self, x: &dyn Fn(Var) -> f64) -> bool {
        self.eval3(&|a: &Atom| {
            let v = a.expr().eval_f64(x);
            Some(match a.relation() {
                crate::lra::Relation::Le => v <= 0.0,
                crate::lra::Relation::Lt => v < 0.0,
                crate::lra::Relation::Eq => v == 0.0,
            })
        })
        .unwrap_or(false)
    }

    pub fn map_atoms(&self, f: &dyn Fn(&Atom) -> Formula) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => f(a),
            Formula::Not(g) => Formula::not(g.map_atoms(f)),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| g.map_atoms(f)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| g.map_atoms(f)).collect()),
            Formula::Implies(a, b) => Formula::implies(a.map_atoms(f), b.map_atoms(f)),
        }
    }

    pub fn substitute(&self, v: Var, e: &LinearExpr) -> Formula {
        self.map_atoms(&|a| Formula::atom(a.substitute(v, e)))
    }

    pub fn substitute_value(&self, v: Var, value: &BigRational) -> Formula {
        self.map_atoms(&|a| Formula::atom(a.substitute_value(v, value)))
    }

    /// Constant folding of True/False leaves.
    pub fn simplify(&self) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(a) => Formula::atom(a.clone()),
            Formula::Not(g) => match g.simplify() {
                Formula::True => Formula::False,
                Formula::False => Formula::True,
                Formula::Not(h) => *h,
                h => Formula::not(h),
            },
            Formula::And(gs) => {
                let mut out = Vec::new();
                for g in gs {
                    match g.simplify() {
                        Formula::True => {}
                        Formula::False => return Formula::False,
                        h => out.push(h),
                    }
                }
                match out.len() {
                    0 => Formula::True,
                    1 => out.pop().unwrap(),
                    _ => Formula::And(out),
                }
            }
            Formula::Or(gs) => {
                let mut out = Vec::new();
                for g in gs {
                    match g.simplify() {
                        Formula::False => {}
                        Formula::True => return Formula::True,
                        h => out.push(h),
                    }
                }
                match out.len() {
                    0 => Formula::False,
                    1 => out.pop().unwrap(),
                    _ => Formula::Or(out),
                }
            }
            Formula::Implies(a, b) => Formula::or([Formula::not((**a).clone()), (**b).clone()]).simplify(),
        }
    }

    pub fn display<'a>(&'a self, names: &'a VarTable) -> DisplayFormula<'a> {
        DisplayFormula { formula: self, names }
    }
}

pub struct DisplayFormula<'a> {
    formula: &'a Formula,
    names: &'a VarTable,
}

impl<'a> fmt::Display for DisplayFormula<'a> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.names;
        let sub = |g: &'a Formula| DisplayFormula { formula: g, names };
        match self.formula {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{}", a.display(self.names)),
            Formula::Not(g) => write!(f, "(not {})", sub(g)),
            Formula::And(gs) | Formula::Or(gs) => {
                let op = if matches!(self.formula, Formula::And(_)) { "and" } else { "or" };
                write!(f, "({op}")?;
                for g in gs {
                    write!(f, " {}", sub(g))?;
                }
                write!(f, ")")
            }
            Formula::Implies(a, b) => write!(f, "(=> {} {})", sub(a), sub(b)),
        }
    }
}
