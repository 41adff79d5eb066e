//! Exact weighted model integration (WMI) over quantifier-free linear real
//! arithmetic with polynomial per-literal weights.
//!
//! The crate is layered bottom-up:
//!
//! - [`poly`]: sparse multivariate polynomials with arbitrary-precision
//!   rational coefficients.
//! - [`lra`]: linear constraints, formulas, an s-expression parser, exact
//!   feasibility and enumeration of convex cells.
//! - [`integrate`]: exact integration of a polynomial over a convex cell, plus
//!   the spline fast path for weights that depend on a single linear functional.
//! - [`wmi`]: the `(Δ, 𝒲)` problem type, the solver and the density/expectation
//!   queries built on it.

pub mod error;
pub mod integrate;
pub mod linear;
pub mod lra;
pub mod poly;
pub mod rational;
pub mod wmi;

pub use error::{Error, Result};
pub use linear::{LinearExpr, Var, VarTable};
pub use num_rational::BigRational;
pub use poly::{Monomial, Polynomial};
