//! Exact and Monte Carlo estimators of outward-step probabilities, the
//! weak-semiconservativity check, index estimation, convex-order tail
//! comparisons and lattice refinement.

pub mod conditional;
pub mod exact_nd;
pub mod index;
pub mod refine;
pub mod tail;
pub mod weak;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactEnumeration,
    MonteCarlo,
    CkBased,
}

/// `P{‖S_t‖ > ‖S_{t-1}‖ | ‖S_{t-1}‖ = z}` with its uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalEstimate {
    pub value: f64,
    /// Zero for exact methods.
    pub stderr: f64,
    /// Deterministic error bound (ratio extraction, rounding); zero for Monte Carlo.
    pub numerical_error: f64,
    pub method: Method,
    pub z: f64,
    /// Horizon used; zero for exact methods.
    pub t: u64,
    pub samples: u64,
}

impl ConditionalEstimate {
    pub fn exact(value: f64, numerical_error: f64, z: f64, samples: u64) -> Self {
        Self { value, stderr: 0.0, numerical_error, method: Method::ExactEnumeration, z, t: 0, samples }
    }
}
