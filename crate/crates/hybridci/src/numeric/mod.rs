//! Deterministic numeric substrate: dense matrices, least squares, the
//! finite-difference oracle, and seeded random streams.
//!
//! Everything here is a pure value type; operations never mutate shared
//! state, so any of them may run from any number of threads.

mod finite_diff;
mod least_squares;
mod matrix;
mod rng;

pub use finite_diff::finite_diff_gradient;
pub use least_squares::{solve_least_squares, LsqSolution, FALLBACK_RIDGE};
pub use matrix::Matrix;
pub use rng::{DrawKind, RngStream};
