//! Quantifier-free linear real arithmetic.

mod atom;
mod cells;
mod feasible;
mod formula;
mod parse;
pub mod simplex;

pub use atom::{Atom, Cmp, Relation};
pub use cells::{enumerate_cells, BoxDomain, Cell, CellBudget, CellDecomposition};
pub use feasible::{feasible, fm_feasible, has_interior, simplex_feasible, Constraint};
pub use formula::Formula;
pub use parse::{parse_formula, parse_polynomial, Parser};
