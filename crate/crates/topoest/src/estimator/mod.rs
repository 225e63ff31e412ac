//! Iterative topology-and-state estimators.
pub mod ppv;
pub mod riv;
