//! Tolerance ladder shared by the library and its test suites.

/// Exact constructions (projectors, permutation matrices, closed forms).
pub const CONSTRUCTION: f64 = 1e-12;
/// Operator flag validation (unitary, projector, isometry).
pub const FLAG: f64 = 1e-10;
/// End-to-end assertions on simulated quantities.
pub const END_TO_END: f64 = 1e-9;
/// Eigenvalues closer than this are treated as equal when breaking ties.
pub const EIGEN_TIE: f64 = 1e-12;
