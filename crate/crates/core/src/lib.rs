//! Discretization-free Monte Carlo pricing of options on `α·S_T + β·∫₀ᵀ S_t dt`
//! under Black–Scholes dynamics.
//!
//! The crate provides exact retrospective rejection sampling, the generalized
//! Poisson unbiased estimator, a pseudo-exact hybrid scheme for standard Asian
//! options, and a trapezoidal baseline with a geometric control variate.

pub mod baseline;
pub mod engine;
pub mod error;
pub mod harness;
pub mod parallel;
pub mod positive;
pub mod params;
pub mod rng;
pub mod skeleton;
pub mod special;
pub mod stats;
pub mod zero;
pub mod zpath;

pub use error::{Error, Result};
pub use params::ModelParams;
pub use rng::RngStream;
pub use skeleton::PathSkeleton;
pub use stats::RunResult;
