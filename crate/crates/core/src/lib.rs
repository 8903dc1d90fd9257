//! Dense simulation laboratory for QMA verifier circuits.
//!
//! The crate builds verifiers as unitaries on `A ⊗ W`, composes them into
//! infinite-counter constructions truncated to `D` levels, and evaluates
//! acceptance probabilities exactly (up to double precision).

// Negated comparisons are how residual checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod amplifiers;
pub mod circuit;
pub mod constructions;
pub mod counter;
mod error;
pub mod tolerance;
pub mod verifier;

pub use error::{Error, Result};
