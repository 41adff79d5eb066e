//! Detection and evaluation of problems whose atoms and weights see a block
//! of box variables only through one linear functional `s = a·w`.
//!
//! The remaining ("outer") variables are integrated by the generic path over
//! the product with `s`, giving a piecewise polynomial profile `g(s)`; the
//! inner block then contributes `vol · E[g(S)]` under the uniform law.

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::integrate::lattice::lattice_expectation;
use crate::integrate::{default_order, eliminate, expectation_exact, functional_terms, Piecewise, UPoly};
use crate::linear::{LinearExpr, Var};
use crate::lra::{enumerate_cells, BoxDomain};
use crate::wmi::problem::{Literal, WmiProblem};
use crate::wmi::solver::{cell_integrand, literal_atoms, split_domain, FastPath, Path, Solution, Solver, Value};

struct Candidate {
    inner: BoxDomain,
    functional: LinearExpr,
    profile: Piecewise,
}

/// Outer variables tried after the all-inner candidate; each try costs a
/// full profile build.
const OUTER_TRIES: usize = 1;

pub(crate) fn solve(solver: &Solver, p: &WmiProblem) -> Result<Option<Solution>> {
    let (active, rest_volume) = split_domain(p);
    let min_inner = if solver.opts.fast_path == FastPath::Always { 1 } else { 2 };
    if active.len() < min_inner {
        return Ok(None);
    }
    let vars: Vec<Var> = active.vars().collect();
    let outer_sets = std::iter::once(None).chain(outer_order(p, &active).into_iter().take(OUTER_TRIES).map(Some));
    let mut fallback: Option<Candidate> = None;
    for outer in outer_sets {
        if vars.len() - usize::from(outer.is_some()) < min_inner {
            continue;
        }
        let Some(c) = candidate(solver, p, &active, outer)? else {
            continue;
        };
        if spans_support(&c)? {
            return finish(solver, c, rest_volume).map(Some);
        }
        if fallback.is_none() {
            fallback = Some(c);
        }
    }
    match fallback {
        Some(c) => finish(solver, c, rest_volume).map(Some),
        None => Ok(None),
    }
}

/// Outer candidates, widest contribution to the first functional first: the
/// profile over a dominant variable is the one most likely to be flat.
fn outer_order(p: &WmiProblem, active: &BoxDomain) -> Vec<Var> {
    let mut atoms = p.delta.atoms();
    atoms.extend(literal_atoms(p));
    let lead = atoms.iter().map(|a| a.expr()).find(|e| !e.is_constant());
    let mut ranked: Vec<(BigRational, Var)> = active
        .iter()
        .map(|(v, l, h)| {
            let c = lead.map_or_else(BigRational::zero, |e| e.coeff(v).abs());
            (c * (h - l), v)
        })
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    ranked.into_iter().map(|(_, v)| v).collect()
}

fn spans_support(c: &Candidate) -> Result<bool> {
    let (lo, hi) = c.inner.range_of(&c.functional)?;
    let (gl, gh) = c.profile.support();
    Ok(c.profile.num_pieces() == 1 && *gl <= lo && hi <= *gh)
}

fn finish(solver: &Solver, c: Candidate, rest_volume: BigRational) -> Result<Solution> {
    let terms = functional_terms(&c.functional, &c.inner)?;
    let volume = c.inner.volume() * rest_volume;
    match expectation_exact(&c.profile, &terms, solver.opts.max_spline_pieces) {
        Ok(e) => Ok(Solution {
            value: Value::Exact(e * volume),
            path: Path::FastExact,
            cells: c.profile.num_pieces(),
            splits: 0,
        }),
        Err(err) if err.is_capacity() && solver.opts.allow_approx => {
            let e = lattice_expectation(&c.profile, &terms, solver.opts.lattice_resolution);
            Ok(Solution {
                value: Value::Approx(e * crate::rational::to_f64(&volume)),
                path: Path::FastLattice,
                cells: c.profile.num_pieces(),
                splits: 0,
            })
        }
        Err(err) => Err(err),
    }
}

/// Checks the factorization for one outer set and builds the profile.
fn candidate(solver: &Solver, p: &WmiProblem, active: &BoxDomain, outer: Option<Var>) -> Result<Option<Candidate>> {
    let is_inner = |v: Var| Some(v) != outer;
    let mut atoms = p.delta.atoms();
    atoms.extend(literal_atoms(p));
    let mut functional: Option<LinearExpr> = None;
    for a in &atoms {
        let r = a.expr().restrict(is_inner);
        if r.is_constant() {
            continue;
        }
        match &functional {
            None => functional = Some(r.normalized().0),
            Some(f) => {
                if r.ratio_to(f).is_none() {
                    return Ok(None);
                }
            }
        }
    }
    let Some(functional) = functional else {
        return Ok(None);
    };
    let inner_vars: BTreeSet<Var> = active.vars().filter(|v| is_inner(*v)).collect();
    let (pivot, lead) = functional.leading().map(|(v, c)| (v, c.clone())).unwrap();
    let s = Var(p.vars.len().max(active.vars().map(|v| v.0 as usize + 1).max().unwrap_or(0)) as u32);
    // pivot = (s - Σ_{i≠pivot} a_i w_i) / a_pivot
    let mut rest = functional.clone();
    rest.add_term(pivot, -lead.clone());
    let sub = (LinearExpr::var(s) - rest).scale(&(BigRational::one() / &lead));
    let reduced = p.substitute(pivot, &sub);
    let mentions_inner = |vs: Vec<Var>| vs.iter().any(|v| inner_vars.contains(v));
    if mentions_inner(reduced.delta.vars()) {
        return Ok(None);
    }
    for w in &reduced.weights {
        if mentions_inner(w.poly.vars().into_iter().collect()) {
            return Ok(None);
        }
        if let Literal::Atom(a) = &w.literal {
            if mentions_inner(a.expr().vars().collect()) {
                return Ok(None);
            }
        }
    }

    let mut inner = BoxDomain::new();
    let mut profile_box = BoxDomain::new();
    for (v, l, h) in active.iter() {
        if inner_vars.contains(&v) {
            inner.set(v, l.clone(), h.clone());
        } else {
            profile_box.set(v, l.clone(), h.clone());
        }
    }
    let (s_lo, s_hi) = inner.range_of(&functional)?;
    if s_lo >= s_hi {
        return Ok(None);
    }
    profile_box.set(s, s_lo.clone(), s_hi.clone());
    let reduced = WmiProblem {
        domain: profile_box,
        ..reduced
    };
    let profile = build_profile(solver, &reduced, s, &s_lo, &s_hi)?;
    Ok(Some(Candidate {
        inner,
        functional,
        profile,
    }))
}

/// `g(s) = ∫ [Δ] Π w d(outer)` as a piecewise polynomial on `[s_lo, s_hi]`.
fn build_profile(solver: &Solver, p: &WmiProblem, s: Var, s_lo: &BigRational, s_hi: &BigRational) -> Result<Piecewise> {
    let extra = literal_atoms(p);
    let dec = enumerate_cells(&p.delta, &extra, &p.domain, solver.opts.cells)?;
    let outer: Vec<Var> = p.domain.vars().filter(|v| *v != s).collect();
    let mut segments: Vec<(BigRational, BigRational, UPoly)> = Vec::new();
    for cell in &dec.cells {
        let integrand = cell_integrand(p, &dec, cell);
        if integrand.is_zero() {
            continue;
        }
        let order: Vec<Var> = default_order(&cell.constraints, outer.iter().copied())
            .into_iter()
            .filter(|v| *v != s)
            .collect();
        let mut splits = 0;
        for piece in eliminate(&integrand, &cell.constraints, &order, solver.opts.integrate.max_splits, &mut splits)? {
            let (lo, hi) = interval(&piece.constraints, s, s_lo, s_hi)?;
            if lo >= hi {
                continue;
            }
            let coeffs = piece
                .poly
                .univariate_coeffs(s)
                .ok_or_else(|| Error::Invalid("profile depends on an outer variable".into()))?;
            segments.push((lo, hi, UPoly(coeffs)));
        }
    }
    let mut breaks: Vec<BigRational> = vec![s_lo.clone(), s_hi.clone()];
    for (l, h, _) in &segments {
        breaks.push(l.clone());
        breaks.push(h.clone());
    }
    breaks.sort();
    breaks.dedup();
    let pieces: Vec<UPoly> = breaks
        .windows(2)
        .map(|w| {
            segments
                .iter()
                .filter(|(l, h, _)| *l <= w[0] && w[1] <= *h)
                .fold(UPoly::zero(), |acc, (_, _, q)| acc.add(q))
        })
        .collect();
    Ok(Piecewise { breaks, pieces }.merged())
}

fn interval(constraints: &[LinearExpr], s: Var, lo: &BigRational, hi: &BigRational) -> Result<(BigRational, BigRational)> {
    let (mut lo, mut hi) = (lo.clone(), hi.clone());
    for e in constraints {
        let c = e.coeff(s);
        if c.is_zero() {
            if !e.is_constant() {
                return Err(Error::Invalid("profile region depends on an outer variable".into()));
            }
            if e.constant_term().is_positive() {
                return Ok((lo.clone(), lo));
            }
            continue;
        }
        let b = -e.constant_term() / &c;
        if c.is_positive() {
            if b < hi {
                hi = b;
            }
        } else if b > lo {
            lo = b;
        }
    }
    Ok((lo, hi))
}
