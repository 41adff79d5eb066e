use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::linear::{LinearExpr, Var, VarTable};

/// Relation of a canonical atom against zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Le,
    Lt,
    Eq,
}

/// Comparison operator as written in source syntax.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Le => "<=",
            Cmp::Lt => "<",
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
            Cmp::Eq => "=",
        }
    }
}

/// Linear constraint `expr ⋈ 0` with `⋈ ∈ {≤, <, =}`.
///
/// Canonical form: the leading (smallest-id) coefficient has magnitude one;
/// equalities additionally have it positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    expr: LinearExpr,
    rel: Relation,
}

impl Atom {
    pub fn new(expr: LinearExpr, rel: Relation) -> Self {
        let (mut expr, _) = expr.normalized();
        if rel == Relation::Eq {
            if let Some((_, c)) = expr.leading() {
                if c.is_negative() {
                    expr = -expr;
                }
            }
        }
        Atom { expr, rel }
    }

    /// `lhs op rhs`.
    pub fn compare(lhs: LinearExpr, op: Cmp, rhs: LinearExpr) -> Self {
        match op {
            Cmp::Le => Atom::new(lhs - rhs, Relation::Le),
            Cmp::Lt => Atom::new(lhs - rhs, Relation::Lt),
            Cmp::Ge => Atom::new(rhs - lhs, Relation::Le),
            Cmp::Gt => Atom::new(rhs - lhs, Relation::Lt),
            Cmp::Eq => Atom::new(lhs - rhs, Relation::Eq),
        }
    }

    pub fn le(lhs: LinearExpr, rhs: LinearExpr) -> Self {
        Self::compare(lhs, Cmp::Le, rhs)
    }

    pub fn ge(lhs: LinearExpr, rhs: LinearExpr) -> Self {
        Self::compare(lhs, Cmp::Ge, rhs)
    }

    pub fn lt(lhs: LinearExpr, rhs: LinearExpr) -> Self {
        Self::compare(lhs, Cmp::Lt, rhs)
    }

    pub fn gt(lhs: LinearExpr, rhs: LinearExpr) -> Self {
        Self::compare(lhs, Cmp::Gt, rhs)
    }

    pub fn expr(&self) -> &LinearExpr {
        &self.expr
    }

    pub fn relation(&self) -> Relation {
        self.rel
    }

    pub fn is_strict(&self) -> bool {
        self.rel == Relation::Lt
    }

    pub fn is_equality(&self) -> bool {
        self.rel == Relation::Eq
    }

    pub fn is_constant(&self) -> bool {
        self.expr.is_constant()
    }

    /// Truth value when the atom mentions no variables.
    pub fn constant_truth(&self) -> Option<bool> {
        if !self.is_constant() {
            return None;
        }
        Some(self.holds_at(self.expr.constant_term()))
    }

    /// Truth of `value ⋈ 0`.
    pub fn holds_at(&self, value: &BigRational) -> bool {
        match self.rel {
            Relation::Le => !value.is_positive(),
            Relation::Lt => value.is_negative(),
            Relation::Eq => value.is_zero(),
        }
    }

    /// Complement as a single atom (`None` for equalities).
    pub fn negate(&self) -> Option<Atom> {
        match self.rel {
            Relation::Le => Some(Atom::new(-self.expr.clone(), Relation::Lt)),
            Relation::Lt => Some(Atom::new(-self.expr.clone(), Relation::Le)),
            Relation::Eq => None,
        }
    }

    pub fn substitute(&self, v: Var, e: &LinearExpr) -> Atom {
        Atom::new(self.expr.substitute(v, e), self.rel)
    }

    pub fn substitute_value(&self, v: Var, value: &BigRational) -> Atom {
        Atom::new(self.expr.substitute_value(v, value), self.rel)
    }

    pub fn mentions(&self, v: Var) -> bool {
        self.expr.mentions(v)
    }

    /// The boundary hyperplane, oriented so its leading coefficient is +1,
    /// and the sign relating it to this atom's expression.
    pub fn hyperplane(&self) -> (LinearExpr, bool) {
        match self.expr.leading() {
            Some((_, c)) if c.is_negative() => (-self.expr.clone(), false),
            _ => (self.expr.clone(), true),
        }
    }

    pub fn display<'a>(&'a self, names: &'a VarTable) -> DisplayAtom<'a> {
        DisplayAtom { atom: self, names }
    }
}

pub struct DisplayAtom<'a> {
    atom: &'a Atom,
    names: &'a VarTable,
}

impl fmt::Display for DisplayAtom<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.atom.rel {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Eq => "=",
        };
        write!(f, "({op} {} 0)", self.atom.expr.display(self.names))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn canonical_forms_dedupe() {
        let w = Var(0);
        let a = Atom::ge(LinearExpr::var(w).scale(&int(2)), LinearExpr::constant(int(4)));
        let b = Atom::le(LinearExpr::constant(int(2)), LinearExpr::var(w));
        assert_eq!(a, b);
        assert_eq!(a.relation(), Relation::Le);
        let eq1 = Atom::compare(LinearExpr::var(w), Cmp::Eq, LinearExpr::constant(int(1)));
        let eq2 = Atom::compare(LinearExpr::constant(int(1)), Cmp::Eq, LinearExpr::var(w));
        assert_eq!(eq1, eq2);
    }

    #[test]
    fn negation_flips_strictness() {
        let w = Var(0);
        let a = Atom::gt(LinearExpr::var(w), LinearExpr::zero());
        let n = a.negate().unwrap();
        assert_eq!(n, Atom::le(LinearExpr::var(w), LinearExpr::zero()));
        assert!(!a.holds_at(&int(0)));
        assert!(n.holds_at(&int(0)));
    }
}
