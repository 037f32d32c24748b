//! Simulation and numerical verification of semiconservative-in-weak-sense
//! random walk families.
//!
//! The crate is organised around six layers: [`families`] (laws and
//! parameters), [`walker`] (plain and reflected walks), [`queue`] (the
//! equivalent multiclass workload model), [`ck_solver`] (Chapman–Kolmogorov
//! integration and occupancy ratios), [`analysis`] (exact and Monte Carlo
//! estimators) and [`cli`] (config-driven batch runs).

pub mod analysis;
pub mod ck_solver;
pub mod cli;
pub mod config;
pub mod error;
pub mod exact;
pub mod families;
pub mod queue;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod walker;

pub use error::{Error, Result};

/// Version string embedded in reports.
pub fn version() -> &'static str {
    env!("SEMIWALK_VERSION")
}
