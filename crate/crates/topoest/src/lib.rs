//! Joint topology detection and state estimation for power distribution
//! feeders.
//!
//! The crate bundles everything needed to study switch-status identification
//! from sparse sensing: a grid data model with a modified 33-bus fixture, a
//! nonlinear AC power-flow solver for ground truth, a measurement synthesizer
//! (micro-PMU phasors, smart-meter demands, substation injection), a
//! mixed-binary convex-QP solver, two iterative WLS estimators that recover
//! switch statuses and bus voltages from a single measurement snapshot, a
//! time-series signature baseline, and a Monte Carlo harness with error
//! metrics and CSV reports.
//!
//! See the guide under `book/` for a narrative walk-through; its code
//! snippets double as doc-tests (run with `cargo test --doc`).

pub mod acpf;
pub mod estimator;
pub mod fixtures;
pub mod grid;
pub mod harness;
pub mod measurement;
pub mod miqp;
pub mod rng;
pub mod sigver;

#[cfg(doctest)]
mod book_doctests;
