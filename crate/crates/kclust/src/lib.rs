//! LP-rounding algorithms for k-median and k-means style clustering.
//!
//! The crate covers the fractional relaxation, an LMP iterative rounding,
//! a pipeline that rounds to `k + O(1)` open facilities, a reduction from such
//! pseudo-solutions to true solutions, and brute-force oracles plus Monte
//! Carlo harnesses used to check the guarantees on small instances.

// `!(x >= lo)` rejects NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cost;
pub mod error;
pub mod graph;
pub mod harness;
pub mod instance;
pub mod lmp;
pub mod lp;
pub mod metric;
pub mod preprocess;
pub mod pseudo;
pub mod reduction;
pub mod rng;
pub mod sample;
pub mod solution;

pub use error::{Error, Result};
pub use instance::Instance;
pub use metric::MetricSpace;
pub use solution::{FractionalSolution, IntegralSolution};
