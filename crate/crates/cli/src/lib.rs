//! Experiment runner for qmalab: configuration, invariant suites, report
//! assembly and random verifier corpora.

// Negated comparisons are how residual checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod gen;
pub mod output;
pub mod suites;

pub use config::{ConfigError, ExperimentConfig};
pub use output::{run, Artifacts};
pub use suites::{Invariant, Suite};
