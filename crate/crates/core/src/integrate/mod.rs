//! Integration of polynomials over convex cells, and the fast path for
//! integrands that see the box only through one linear functional.

mod cell;
mod functional;
pub mod lattice;
pub mod spline;

pub use cell::{default_order, eliminate, integrate_cell, integrate_region, IntegrateOptions, IntegrationResult, Piece};
pub use functional::{expectation_exact, functional_terms, integrate_linear_functional, DEFAULT_MAX_PIECES};
pub use spline::{Piecewise, UPoly, UniformTerm};
