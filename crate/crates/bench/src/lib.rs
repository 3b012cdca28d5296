//! Benchmark harness for generalized plane waves: the four reference test
//! cases with exact solutions, manufactured-solution validation, random-centre
//! convergence studies, order estimation and report output.

pub mod cases;
pub mod config;
pub mod convergence;
pub mod error;
pub mod order;
pub mod report;
pub mod special;

pub use error::{BenchError, Result};
