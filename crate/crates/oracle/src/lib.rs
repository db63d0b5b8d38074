//! Independent oracles backing the dayflow test suite.
//!
//! Everything in this crate recomputes answers by a *different* route
//! than the main crate: exact rational linear programming instead of
//! float simplex, direct set counting instead of measure algebra, and
//! certified branch-and-bound instead of LP duality. Only the group
//! element arithmetic is shared — it is the common language both sides
//! must speak for the comparison to be about the mathematics rather than
//! about encodings.
//!
//! The `derive-constants` binary prints the exact regression constants
//! that the acceptance suite pins as floats.

pub mod day;
pub mod defect;
pub mod exact;

pub use day::day_simplex_search;
pub use defect::{tv_defect_exact, tv_optimum, uniform_ball_tv_defect};
pub use exact::{rat, rat_int, to_f64, Cmp, ExactProgram, ExactSolution, Rat};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("the program is infeasible")]
    Infeasible,
    #[error("the program is unbounded")]
    Unbounded,
    #[error("{0}")]
    Invalid(String),
}
