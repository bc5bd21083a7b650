//! Model-agnostic retrospective simulation: the exact rejection sampler and
//! the generalized Poisson unbiased estimator for diffusions
//! `dX = a(X) dt + dW`.

mod estimate;
mod exact;
pub mod toy;
mod unbiased;

pub use estimate::{aggregate_delta1, aggregate_delta2, SampleStats};
pub use exact::{
    acceptance_rate, exact_attempt, exact_simulate_terminal, ExactDraw, ExactOptions,
    DEFAULT_RETRY_CAP,
};
pub use unbiased::{
    generalized_poisson_factor, optimal_count_time_laws, ue_poisson_variant, ue_sample,
    CountLaw, CountRule, GeometricCount, OptimalLaws, PoissonCount, ShiftRule, TabulatedTime,
    TimeDensity, UeChoices, UniformTime,
};

use crate::error::Result;
use crate::rng::RngStream;

/// A draw of the terminal value together with the log-density of the law it
/// was drawn from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TerminalDraw {
    pub value: f64,
    pub ln_density: f64,
    /// Proposals consumed by the terminal sampler.
    pub attempts: u64,
}

/// A unit-diffusion model `dX = a(X) dt + dW`, `X_0 = start`, on `[0, horizon]`.
///
/// Implementors guarantee `potential(u) ≥ potential_floor()` everywhere and
/// `bound_above(m) ≥ potential(u) − potential_floor()` for every `u ≥ m`.
pub trait ExactModel: Sync {
    fn start(&self) -> f64;
    fn horizon(&self) -> f64;
    /// Drift `a(u)`.
    fn drift(&self, u: f64) -> f64;
    /// Primitive `A(u)` with `A' = a`.
    fn drift_primitive(&self, u: f64) -> f64;
    /// `φ(u) = (a²(u) + a'(u)) / 2`.
    fn potential(&self, u: f64) -> f64;
    /// Lower bound `k` of `φ`.
    fn potential_floor(&self) -> f64;
    /// `sup { φ(u) − k : u ≥ m }`.
    fn bound_above(&self, m: f64) -> f64;
    /// Exact draw from the density `h(u) ∝ exp(A(u) − (u − x0)² / 2T)`.
    fn sample_terminal(&self, rng: &mut RngStream) -> Result<TerminalDraw>;
    /// Draw from the importance density `ρ` used by the unbiased estimator.
    fn sample_reference(&self, rng: &mut RngStream) -> TerminalDraw;
}

/// One Monte Carlo draw of an estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorSample {
    /// Discounted payoff contribution.
    pub weight: f64,
    /// The same weight with the payoff replaced by one (denominator of the
    /// self-normalised estimator).
    pub unit_weight: f64,
    /// Control variate paired with this draw, when the method provides one.
    pub control: Option<f64>,
    pub accepted: bool,
    pub poisson_count: u64,
    /// Rejected proposals before this draw.
    pub retries: u64,
    pub skeleton_size: usize,
}

impl EstimatorSample {
    pub fn plain(weight: f64) -> Self {
        EstimatorSample {
            weight,
            unit_weight: 1.0,
            control: None,
            accepted: true,
            poisson_count: 0,
            retries: 0,
            skeleton_size: 0,
        }
    }
}
