//! Reduction of estimator samples into priced results.

use super::EstimatorSample;
use crate::error::{Error, Result};
use crate::parallel::Accumulator;
use crate::stats::{Moments, PairMoments, RunResult};

/// Streaming summary of [`EstimatorSample`]s.
#[derive(Clone, Debug, Default)]
pub struct SampleStats {
    /// (weight, unit weight).
    pub weights: PairMoments,
    /// (weight, control) over samples that carry a control.
    pub controlled: PairMoments,
    /// Draws that ended accepted.
    pub accepted: u64,
    /// Proposals consumed, rejected ones included.
    pub attempts: u64,
    pub poisson_points: u64,
    pub max_abs_weight: f64,
    pub sum_abs_weight: f64,
}

impl SampleStats {
    pub fn push(&mut self, s: &EstimatorSample) {
        self.weights.push(s.weight, s.unit_weight);
        if let Some(c) = s.control {
            self.controlled.push(s.weight, c);
        }
        if s.accepted {
            self.accepted += 1;
        }
        self.attempts += s.retries + 1;
        self.poisson_points += s.poisson_count;
        self.max_abs_weight = self.max_abs_weight.max(s.weight.abs());
        self.sum_abs_weight += s.weight.abs();
    }

    pub fn count(&self) -> u64 {
        self.weights.count()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }

    fn weight_moments(&self) -> Moments {
        self.weights.x_moments()
    }

    /// Plain sample mean of the weights.
    pub fn delta1(&self) -> Result<RunResult> {
        if self.count() < 2 {
            return Err(Error::Estimation(format!(
                "need at least 2 samples, got {}",
                self.count()
            )));
        }
        Ok(RunResult::from_moments(&self.weight_moments()).with_acceptance(self.acceptance_rate()))
    }

    /// Ratio of payoff weights to unit weights.
    pub fn delta2(&self) -> Result<RunResult> {
        if self.count() < 2 {
            return Err(Error::Estimation(format!(
                "need at least 2 samples, got {}",
                self.count()
            )));
        }
        let (r, se) = self.weights.ratio()?;
        Ok(RunResult::from_estimate(r, se, self.count()).with_acceptance(self.acceptance_rate()))
    }

    /// Control-variate estimate `mean(X) − λ·(mean(Y) − E[Y])`; `None` fits λ.
    pub fn with_control(&self, lambda: Option<f64>, exact_mean: f64) -> Result<RunResult> {
        let n = self.controlled.count();
        if n < 2 {
            return Err(Error::Estimation(format!(
                "need at least 2 controlled samples, got {n}"
            )));
        }
        let lambda = lambda.unwrap_or_else(|| self.controlled.optimal_lambda());
        let (est, se) = self.controlled.control_variate(lambda, exact_mean);
        Ok(RunResult::from_estimate(est, se, n).with_acceptance(self.acceptance_rate()))
    }
}

impl Accumulator for SampleStats {
    fn merge(&mut self, other: Self) {
        self.weights.merge(&other.weights);
        self.controlled.merge(&other.controlled);
        self.accepted += other.accepted;
        self.attempts += other.attempts;
        self.poisson_points += other.poisson_points;
        self.max_abs_weight = self.max_abs_weight.max(other.max_abs_weight);
        self.sum_abs_weight += other.sum_abs_weight;
    }
}

fn collect(samples: &[EstimatorSample]) -> SampleStats {
    let mut s = SampleStats::default();
    for x in samples {
        s.push(x);
    }
    s
}

/// Sample mean of the weights with its 95% interval.
pub fn aggregate_delta1(samples: &[EstimatorSample]) -> Result<RunResult> {
    collect(samples).delta1()
}

/// Self-normalised ratio estimate with a delta-method standard error.
pub fn aggregate_delta2(samples: &[EstimatorSample]) -> Result<RunResult> {
    collect(samples).delta2()
}
