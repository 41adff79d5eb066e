//! Weighted model integration: the `(Δ, 𝒲)` problem and its queries.

mod fastpath;
pub mod format;
mod problem;
mod solver;

pub use problem::{Literal, Weight, WmiProblem};
pub use solver::{wmi, wmi_conditioned, wmi_expectation, FastPath, Path, Solution, Solver, SolverOptions, Value};
