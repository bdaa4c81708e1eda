//! Embedded exact solver for dense mixed-binary programs.
//!
//! Two components:
//!
//! 1. a two-phase primal simplex on a dense tableau with bounded
//!    variables (upper bounds are handled by column complements, not
//!    extra rows), and
//! 2. a best-first branch-and-bound that solves one LP relaxation per
//!    node and branches on the most fractional integer variable.
//!
//! Solver effort is reported as a [`WorkMetric`] (simplex pivots and
//! branch-and-bound nodes). The metric is a pure function of the
//! problem data and configuration: no wall-clock, no randomness, no
//! thread-dependent behavior. Constraint and column order are honored
//! verbatim, so permuting rows of an equivalent problem generally
//! changes the work metric while leaving the optimum intact.

mod branch;
mod problem;
mod simplex;

pub use branch::{solve_mip, solve_mip_with, BnbConfig};
pub use problem::{MipError, MipProblem, RowSense, SolveResult, SolveStatus, WorkMetric};
pub use simplex::{solve_lp, solve_lp_bounded};

/// Feasibility and integrality tolerance shared by the simplex and the
/// branch-and-bound.
pub const FEAS_TOL: f64 = 1e-6;

/// Absolute optimality gap at which a branch-and-bound node is fathomed.
pub const GAP_ABS: f64 = 1e-6;
