//! Exact integration over convex polytopes by bound-dominance case splitting.

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linear::{LinearExpr, Var};
use crate::lra::{has_interior, Cell, Constraint};
use crate::poly::Polynomial;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationResult {
    pub value: BigRational,
    pub cells_split: usize,
}

#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    /// Elimination order; must cover every variable of the cell.
    pub order: Option<Vec<Var>>,
    pub max_splits: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            order: None,
            max_splits: 100_000,
        }
    }
}

/// A polytope `{e ≤ 0 : e ∈ constraints}` carrying a polynomial integrand.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub constraints: Vec<LinearExpr>,
    pub poly: Polynomial,
}

/// Variables in ascending order of how many constraints mention them.
pub fn default_order(constraints: &[LinearExpr], extra: impl IntoIterator<Item = Var>) -> Vec<Var> {
    let mut vars: BTreeSet<Var> = extra.into_iter().collect();
    for e in constraints {
        vars.extend(e.vars());
    }
    let mut order: Vec<Var> = vars.into_iter().collect();
    order.sort_by_key(|v| (constraints.iter().filter(|e| e.mentions(*v)).count(), *v));
    order
}

/// `∫_cell p dx`.
pub fn integrate_cell(p: &Polynomial, cell: &Cell, opts: &IntegrateOptions) -> Result<IntegrationResult> {
    integrate_region(p, &cell.constraints, opts)
}

/// `∫ p dx` over `{e ≤ 0 : e ∈ constraints}`.
pub fn integrate_region(p: &Polynomial, constraints: &[LinearExpr], opts: &IntegrateOptions) -> Result<IntegrationResult> {
    let order = match &opts.order {
        Some(o) => {
            let needed = default_order(constraints, p.vars());
            if let Some(v) = needed.iter().find(|v| !o.contains(v)) {
                return Err(Error::Invalid(format!("elimination order omits {v}")));
            }
            o.clone()
        }
        None => default_order(constraints, p.vars()),
    };
    let mut splits = 0;
    let pieces = eliminate(p, constraints, &order, opts.max_splits, &mut splits)?;
    let mut value = BigRational::zero();
    for piece in pieces {
        let c = piece.poly.as_constant().ok_or_else(|| {
            let v = piece.poly.vars().into_iter().next().map(|v| v.to_string()).unwrap_or_default();
            Error::Unbounded(v)
        })?;
        value += c;
    }
    Ok(IntegrationResult {
        value,
        cells_split: splits,
    })
}

/// Integrates out `vars` in order. The returned pieces have interior-disjoint
/// regions over the remaining variables and sum to the partial integral.
pub fn eliminate(p: &Polynomial, constraints: &[LinearExpr], vars: &[Var], max_splits: usize, splits: &mut usize) -> Result<Vec<Piece>> {
    let start = dedupe(constraints.iter().cloned());
    if p.is_zero() || !interior(&start) {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut stack = vec![(start, p.clone(), 0usize)];
    while let Some((cons, poly, k)) = stack.pop() {
        if k == vars.len() {
            out.push(Piece { constraints: cons, poly });
            continue;
        }
        let v = vars[k];
        match step(&cons, &poly, v)? {
            Step::Empty => {}
            Step::Reduced(c, q) => {
                if !q.is_zero() {
                    stack.push((c, q, k + 1));
                }
            }
            Step::Prune(c) => stack.push((c, poly, k)),
            Step::Split(a, b) => {
                *splits += 1;
                if *splits > max_splits {
                    return Err(Error::capacity("integration case splits", max_splits));
                }
                stack.push((b, poly.clone(), k));
                stack.push((a, poly, k));
            }
        }
    }
    Ok(out)
}

enum Step {
    Empty,
    Reduced(Vec<LinearExpr>, Polynomial),
    Prune(Vec<LinearExpr>),
    Split(Vec<LinearExpr>, Vec<LinearExpr>),
}

fn interior(cons: &[LinearExpr]) -> bool {
    let cs: Vec<Constraint> = cons.iter().cloned().map(Constraint::le).collect();
    has_interior(&cs)
}

fn dedupe(cons: impl IntoIterator<Item = LinearExpr>) -> Vec<LinearExpr> {
    let mut out: Vec<LinearExpr> = Vec::new();
    for e in cons {
        let (n, _) = e.normalized();
        if n.is_constant() && !n.constant_term().is_positive() {
            continue;
        }
        if !out.contains(&n) {
            out.push(n);
        }
    }
    out
}

/// Bound on `v` implied by constraint `e ≤ 0`: `(is_upper, bound)`.
fn bound(e: &LinearExpr, v: Var) -> (bool, LinearExpr) {
    let a = e.coeff(v);
    let rest = e.substitute_value(v, &BigRational::zero());
    (a.is_positive(), rest.scale(&(-BigRational::one() / a)))
}

fn without(cons: &[LinearExpr], drop: usize, add: Option<LinearExpr>) -> Vec<LinearExpr> {
    let kept = cons.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, e)| e.clone());
    dedupe(kept.chain(add))
}

fn step(cons: &[LinearExpr], p: &Polynomial, v: Var) -> Result<Step> {
    let mut lowers: Vec<(usize, LinearExpr)> = Vec::new();
    let mut uppers: Vec<(usize, LinearExpr)> = Vec::new();
    for (i, e) in cons.iter().enumerate() {
        if e.mentions(v) {
            let (up, b) = bound(e, v);
            if up {
                uppers.push((i, b));
            } else {
                lowers.push((i, b));
            }
        }
    }
    if lowers.is_empty() || uppers.is_empty() {
        return Err(Error::Unbounded(v.to_string()));
    }
    // Lower bounds: keep the larger. Upper bounds: keep the smaller.
    for (group, keep_larger) in [(&lowers, true), (&uppers, false)] {
        if group.len() < 2 {
            continue;
        }
        let (i1, b1) = &group[0];
        let (i2, b2) = &group[1];
        // d ≤ 0 means b1 wins.
        let d = if keep_larger { b2.clone() - b1.clone() } else { b1.clone() - b2.clone() };
        if d.is_constant() {
            let drop = if d.constant_term().is_positive() { *i1 } else { *i2 };
            return Ok(Step::Prune(without(cons, drop, None)));
        }
        let first = without(cons, *i2, Some(d.clone()));
        let second = without(cons, *i1, Some(-d));
        let first_ok = interior(&first);
        let second_ok = interior(&second);
        return Ok(match (first_ok, second_ok) {
            (true, true) => Step::Split(first, second),
            (true, false) => Step::Prune(without(cons, *i2, None)),
            (false, true) => Step::Prune(without(cons, *i1, None)),
            (false, false) => Step::Empty,
        });
    }
    let (_, l) = &lowers[0];
    let (_, u) = &uppers[0];
    let gap = l.clone() - u.clone();
    if gap.is_constant() && gap.constant_term().is_positive() {
        return Ok(Step::Empty);
    }
    let rest = cons.iter().filter(|e| !e.mentions(v)).cloned();
    let reduced = dedupe(rest.chain(std::iter::once(gap)));
    let f = p.antiderivative(v);
    let q = f.substitute_linear(v, u) - f.substitute_linear(v, l);
    Ok(Step::Reduced(reduced, q))
}
