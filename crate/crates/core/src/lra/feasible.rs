//! Exact satisfiability of conjunctions of linear inequalities.
//!
//! Fourier–Motzkin elimination with parallel-constraint pruning handles the
//! small systems produced by cell enumeration; the simplex decides anything
//! that grows past the row cap.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::linear::{LinearExpr, Var};
use crate::lra::simplex::{maximize, LpOutcome};

/// `expr < 0` when strict, else `expr ≤ 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    pub expr: LinearExpr,
    pub strict: bool,
}

impl Constraint {
    pub fn le(expr: LinearExpr) -> Self {
        Constraint { expr, strict: false }
    }

    pub fn lt(expr: LinearExpr) -> Self {
        Constraint { expr, strict: true }
    }

    pub fn strict(&self) -> Self {
        Constraint {
            expr: self.expr.clone(),
            strict: true,
        }
    }
}

const FM_ROW_CAP: usize = 4000;

/// Decides satisfiability exactly.
pub fn feasible(cs: &[Constraint]) -> bool {
    match fm_feasible(cs, FM_ROW_CAP) {
        Some(b) => b,
        None => simplex_feasible(cs),
    }
}

/// Decides whether the open set `{all constraints strict}` is nonempty.
pub fn has_interior(cs: &[Constraint]) -> bool {
    let strict: Vec<Constraint> = cs.iter().map(Constraint::strict).collect();
    feasible(&strict)
}

/// Parallel constraints keep only the tightest; constants are checked eagerly.
/// Returns `None` if the system is trivially infeasible.
fn prune(cs: impl IntoIterator<Item = Constraint>) -> Option<Vec<Constraint>> {
    // Key: normalized coefficient vector; value: (constant, strict).
    let mut tightest: BTreeMap<LinearExpr, (BigRational, bool)> = BTreeMap::new();
    for c in cs {
        if c.expr.is_constant() {
            let k = c.expr.constant_term();
            if k.is_positive() || (c.strict && k.is_zero()) {
                return None;
            }
            continue;
        }
        let (n, _) = c.expr.normalized();
        let key = n.restrict(|_| true);
        let k = n.constant_term().clone();
        match tightest.get_mut(&key) {
            None => {
                tightest.insert(key, (k, c.strict));
            }
            Some(slot) => {
                if k > slot.0 || (k == slot.0 && c.strict) {
                    *slot = (k, c.strict);
                }
            }
        }
    }
    Some(
        tightest
            .into_iter()
            .map(|(mut e, (k, strict))| {
                e.add_constant(&k);
                Constraint { expr: e, strict }
            })
            .collect(),
    )
}

/// Fourier–Motzkin; `None` if an intermediate system exceeds `cap` rows.
pub fn fm_feasible(cs: &[Constraint], cap: usize) -> Option<bool> {
    let Some(mut sys) = prune(cs.iter().cloned()) else {
        return Some(false);
    };
    loop {
        let vars: BTreeSet<Var> = sys.iter().flat_map(|c| c.expr.vars().collect::<Vec<_>>()).collect();
        if vars.is_empty() {
            return Some(true);
        }
        // Cheapest variable: fewest generated pairs.
        let v = *vars
            .iter()
            .min_by_key(|&&v| {
                let pos = sys.iter().filter(|c| c.expr.coeff(v).is_positive()).count();
                let neg = sys.iter().filter(|c| c.expr.coeff(v).is_negative()).count();
                (pos * neg) as isize - (pos + neg) as isize
            })
            .unwrap();
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        let mut rest = Vec::new();
        for c in sys {
            let a = c.expr.coeff(v);
            if a.is_zero() {
                rest.push(c);
            } else {
                let scaled = Constraint {
                    expr: c.expr.scale(&(BigRational::one() / a.abs())),
                    strict: c.strict,
                };
                if a.is_positive() {
                    upper.push(scaled);
                } else {
                    lower.push(scaled);
                }
            }
        }
        if rest.len() + upper.len() * lower.len() > cap {
            return None;
        }
        for u in &upper {
            for l in &lower {
                rest.push(Constraint {
                    expr: u.expr.clone() + l.expr.clone(),
                    strict: u.strict || l.strict,
                });
            }
        }
        match prune(rest) {
            None => return Some(false),
            Some(s) => sys = s,
        }
    }
}

/// Simplex decision procedure. Strict rows get a shared slack `t` that is maximized.
pub fn simplex_feasible(cs: &[Constraint]) -> bool {
    let vars: Vec<Var> = cs
        .iter()
        .flat_map(|c| c.expr.vars().collect::<Vec<_>>())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = vars.len();
    let any_strict = cs.iter().any(|c| c.strict);
    // Columns: x+ (n), x- (n), t.
    let width = 2 * n + 1;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for c in cs {
        let mut row = vec![BigRational::zero(); width];
        for (j, v) in vars.iter().enumerate() {
            let k = c.expr.coeff(*v);
            row[n + j] = -k.clone();
            row[j] = k;
        }
        if c.strict {
            row[2 * n] = BigRational::one();
        }
        a.push(row);
        b.push(-c.expr.constant_term().clone());
    }
    let mut cap = vec![BigRational::zero(); width];
    cap[2 * n] = BigRational::one();
    a.push(cap);
    b.push(BigRational::one());
    let mut obj = vec![BigRational::zero(); width];
    if any_strict {
        obj[2 * n] = BigRational::one();
    }
    match maximize(&obj, &a, &b) {
        LpOutcome::Infeasible => false,
        LpOutcome::Unbounded => true,
        LpOutcome::Optimal { value, .. } => !any_strict || value.is_positive(),
    }
}
