//! Kernel estimation of the upper boundary of a planar point cloud from
//! strip-wise maxima.
//!
//! The support set is `D = {(x, y) : 0 <= x <= 1, 0 <= y <= f(x)}`. The
//! unit interval is cut into `k` strips, the highest ordinate in each strip
//! is recorded, and the maxima are smoothed with a compactly supported kernel
//! plus a small additive correction that removes the first-order bias of
//! the maxima.
//!
//! Modules:
//!
//! - [`model`]: frontier families, kernels, derived constants.
//! - [`sim`]: uniform samples on `D`, homogeneous Poisson processes and the
//!   coupled lower/upper Poisson pair built from one shared point stream.
//! - [`estimator`]: strip maxima, weights, the estimator, an independent
//!   recomputation used in tests, and the rate-condition planner.
//! - [`experiments`]: Monte Carlo harness (asymptotic normality, sandwich
//!   ordering, coupling gap rates, weight-sum convergence).
//! - [`report`]: JSON / CSV serialization of samples and reports.

pub mod error;
pub mod estimator;
pub mod experiments;
pub mod model;
pub mod quadrature;
pub mod report;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use estimator::{
    estimate, estimate_oracle, plan_sequences, strip_maxima, weights, EstimatorParams,
    ExponentPlan, StripMaxima,
};
pub use model::{sigma_theoretical, Frontier, FrontierFamily, Kernel, KernelFamily};
pub use sim::{Point, Provenance, SampleSet, SandwichTriple};
