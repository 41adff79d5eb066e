//! Boxes and the decomposition of `Δ ∧ box` into convex cells.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::error::{Error, Result};
use crate::linear::{LinearExpr, Var, VarTable};
use crate::lra::atom::Atom;
use crate::lra::feasible::{has_interior, Constraint};
use crate::lra::formula::Formula;

/// Axis-aligned box `Π [lo_v, hi_v]`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BoxDomain {
    bounds: BTreeMap<Var, (BigRational, BigRational)>,
}

impl BoxDomain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, v: Var, lo: BigRational, hi: BigRational) -> Self {
        self.set(v, lo, hi);
        self
    }

    pub fn set(&mut self, v: Var, lo: BigRational, hi: BigRational) {
        self.bounds.insert(v, (lo, hi));
    }

    pub fn get(&self, v: Var) -> Option<&(BigRational, BigRational)> {
        self.bounds.get(&v)
    }

    pub fn remove(&mut self, v: Var) -> Option<(BigRational, BigRational)> {
        self.bounds.remove(&v)
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.bounds.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &BigRational, &BigRational)> {
        self.bounds.iter().map(|(v, (l, h))| (*v, l, h))
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    pub fn volume(&self) -> BigRational {
        self.bounds.values().fold(BigRational::one(), |acc, (l, h)| acc * (h - l))
    }

    pub fn validate(&self, names: Option<&VarTable>) -> Result<()> {
        for (v, (l, h)) in &self.bounds {
            if l > h {
                let name = names.map(|t| t.name(*v).to_string()).unwrap_or_else(|| v.to_string());
                return Err(Error::Invalid(format!("empty box interval for `{name}`: [{l}, {h}]")));
            }
        }
        Ok(())
    }

    /// The box as `lo - v ≤ 0`, `v - hi ≤ 0`.
    pub fn constraints(&self) -> Vec<Constraint> {
        let mut out = Vec::with_capacity(2 * self.bounds.len());
        for (v, (l, h)) in &self.bounds {
            out.push(Constraint::le(LinearExpr::constant(l.clone()) - LinearExpr::var(*v)));
            out.push(Constraint::le(LinearExpr::var(*v) - LinearExpr::constant(h.clone())));
        }
        out
    }

    /// Range of an affine expression over the box.
    pub fn range_of(&self, e: &LinearExpr) -> Result<(BigRational, BigRational)> {
        let mut lo = e.constant_term().clone();
        let mut hi = lo.clone();
        for (v, c) in e.coeffs() {
            let (l, h) = self.bounds.get(v).ok_or_else(|| Error::Unbounded(v.to_string()))?;
            if c.is_positive() {
                lo += c * l;
                hi += c * h;
            } else {
                lo += c * h;
                hi += c * l;
            }
        }
        Ok((lo, hi))
    }

    pub fn contains(&self, point: &BTreeMap<Var, BigRational>) -> bool {
        self.bounds
            .iter()
            .all(|(v, (l, h))| point.get(v).is_some_and(|x| l <= x && x <= h))
    }
}

/// A convex polytope `{x : constraints}` together with the truth value of
/// every atom of interest on its interior.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub constraints: Vec<LinearExpr>,
    pub truth: Vec<bool>,
}

/// Output of [`enumerate_cells`]: cells indexed against a shared atom table.
#[derive(Debug, Clone)]
pub struct CellDecomposition {
    pub atoms: Vec<Atom>,
    pub cells: Vec<Cell>,
}

impl CellDecomposition {
    pub fn truth(&self, cell: &Cell, atom: &Atom) -> Option<bool> {
        self.atoms.iter().position(|a| a == atom).map(|i| cell.truth[i])
    }
}

/// Limits on the enumeration.
#[derive(Debug, Clone, Copy)]
pub struct CellBudget {
    pub max_hyperplanes: usize,
    pub max_cells: usize,
}

impl Default for CellBudget {
    fn default() -> Self {
        CellBudget {
            max_hyperplanes: 64,
            max_cells: 200_000,
        }
    }
}

/// Splits `box ∧ Δ` into full-dimensional convex cells on which every atom
/// of `Δ` and of `extra` has constant truth. Cell boundaries are measure zero
/// and dropped.
pub fn enumerate_cells(formula: &Formula, extra: &[Atom], domain: &BoxDomain, budget: CellBudget) -> Result<CellDecomposition> {
    let mut atoms = formula.atoms();
    for a in extra {
        if !atoms.contains(a) {
            atoms.push(a.clone());
        }
    }
    for a in &atoms {
        if a.is_equality() && !a.is_constant() {
            return Err(Error::EqualityInCell(format!("{a:?}")));
        }
        for v in a.expr().vars() {
            if domain.get(v).is_none() {
                return Err(Error::Unbounded(v.to_string()));
            }
        }
    }

    // Hyperplane table; each atom is `sign·h ⋈ 0`.
    let mut planes: Vec<LinearExpr> = Vec::new();
    let mut atom_plane: Vec<Option<(usize, bool)>> = Vec::new();
    for a in &atoms {
        if a.is_constant() {
            atom_plane.push(None);
            continue;
        }
        let (h, positive) = a.hyperplane();
        let idx = match planes.iter().position(|p| *p == h) {
            Some(i) => i,
            None => {
                planes.push(h);
                planes.len() - 1
            }
        };
        atom_plane.push(Some((idx, positive)));
    }
    if planes.len() > budget.max_hyperplanes {
        return Err(Error::capacity("distinct hyperplanes", budget.max_hyperplanes));
    }

    let base = domain.constraints();
    if !has_interior(&base) {
        return Ok(CellDecomposition { atoms, cells: Vec::new() });
    }
    let mut e = Enumerator {
        formula,
        atoms: &atoms,
        atom_plane: &atom_plane,
        planes: &planes,
        budget,
        sides: Vec::new(),
        cells: Vec::new(),
    };
    e.descend(&mut base.clone())?;
    let cells = e.cells;
    Ok(CellDecomposition { atoms, cells })
}

struct Enumerator<'a> {
    formula: &'a Formula,
    atoms: &'a [Atom],
    atom_plane: &'a [Option<(usize, bool)>],
    planes: &'a [LinearExpr],
    budget: CellBudget,
    /// `true` means the negative side `h < 0`.
    sides: Vec<bool>,
    cells: Vec<Cell>,
}

impl Enumerator<'_> {
    fn atom_truth(&self, i: usize, side_negative: bool) -> bool {
        // Interior points have h ≠ 0, so strict and non-strict atoms agree.
        let (_, positive) = self.atom_plane[i].unwrap();
        side_negative == positive
    }

    fn partial(&self, a: &Atom) -> Option<bool> {
        let i = self.atoms.iter().position(|b| b == a)?;
        let (p, _) = self.atom_plane[i]?;
        self.sides.get(p).map(|&s| self.atom_truth(i, s))
    }

    fn descend(&mut self, region: &mut Vec<Constraint>) -> Result<()> {
        if self.formula.eval3(&|a| self.partial(a)) == Some(false) {
            return Ok(());
        }
        let depth = self.sides.len();
        if depth == self.planes.len() {
            let truth = (0..self.atoms.len())
                .map(|i| match self.atom_plane[i] {
                    None => self.atoms[i].constant_truth().unwrap_or(false),
                    Some((p, _)) => self.atom_truth(i, self.sides[p]),
                })
                .collect();
            if self.cells.len() >= self.budget.max_cells {
                return Err(Error::capacity("convex cells", self.budget.max_cells));
            }
            self.cells.push(Cell {
                constraints: region.iter().map(|c| c.expr.clone()).collect(),
                truth,
            });
            return Ok(());
        }
        let h = &self.planes[depth];
        for negative in [true, false] {
            let c = if negative {
                Constraint::le(h.clone())
            } else {
                Constraint::le(-h.clone())
            };
            region.push(c);
            if has_interior(region) {
                self.sides.push(negative);
                self.descend(region)?;
                self.sides.pop();
            }
            region.pop();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lra::parse::parse_formula;
    use crate::rational::int;

    #[test]
    fn interval_split() {
        let mut vars = VarTable::new();
        let f = parse_formula("(or (<= w -1) (> w 1))", &mut vars).unwrap();
        let w = vars.lookup("w").unwrap();
        let dom = BoxDomain::new().with(w, int(-3), int(3));
        let d = enumerate_cells(&f, &[], &dom, CellBudget::default()).unwrap();
        assert_eq!(d.cells.len(), 2);
    }

    #[test]
    fn equalities_rejected() {
        let mut vars = VarTable::new();
        let f = parse_formula("(= w 1)", &mut vars).unwrap();
        let w = vars.lookup("w").unwrap();
        let dom = BoxDomain::new().with(w, int(-3), int(3));
        assert!(matches!(
            enumerate_cells(&f, &[], &dom, CellBudget::default()),
            Err(Error::EqualityInCell(_))
        ));
    }

    #[test]
    fn parallel_atoms_share_a_plane() {
        let mut vars = VarTable::new();
        let f = parse_formula("(and (>= (* 2 w) 0) (not (< w 0)))", &mut vars).unwrap();
        let w = vars.lookup("w").unwrap();
        let dom = BoxDomain::new().with(w, int(-1), int(1));
        let d = enumerate_cells(&f, &[], &dom, CellBudget::default()).unwrap();
        assert_eq!(d.cells.len(), 1);
    }
}
