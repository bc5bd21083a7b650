//! Streaming moments and run summaries.

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile used for every confidence interval.
pub const Z95: f64 = 1.96;

/// Streaming mean/variance of one variable (Welford update, Chan merge).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        self.mean += d * w;
        self.m2 += other.m2 + d * d * self.n as f64 * w;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Streaming first and second moments of a pair `(x, y)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairMoments {
    n: u64,
    mean_x: f64,
    mean_y: f64,
    m2x: f64,
    m2y: f64,
    cxy: f64,
}

impl PairMoments {
    #[inline]
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        let nf = self.n as f64;
        let dx = x - self.mean_x;
        let dy = y - self.mean_y;
        self.mean_x += dx / nf;
        self.mean_y += dy / nf;
        self.m2x += dx * (x - self.mean_x);
        self.m2y += dy * (y - self.mean_y);
        self.cxy += dx * (y - self.mean_y);
    }

    pub fn merge(&mut self, other: &PairMoments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let w = other.n as f64 / n as f64;
        let dx = other.mean_x - self.mean_x;
        let dy = other.mean_y - self.mean_y;
        let cross = self.n as f64 * w;
        self.mean_x += dx * w;
        self.mean_y += dy * w;
        self.m2x += other.m2x + dx * dx * cross;
        self.m2y += other.m2y + dy * dy * cross;
        self.cxy += other.cxy + dx * dy * cross;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean_x(&self) -> f64 {
        self.mean_x
    }

    /// Marginal moments of `x`.
    pub fn x_moments(&self) -> Moments {
        Moments {
            n: self.n,
            mean: self.mean_x,
            m2: self.m2x,
        }
    }

    pub fn mean_y(&self) -> f64 {
        self.mean_y
    }

    fn denom(&self) -> f64 {
        (self.n.max(2) - 1) as f64
    }

    pub fn var_x(&self) -> f64 {
        (self.m2x / self.denom()).max(0.0)
    }

    pub fn var_y(&self) -> f64 {
        (self.m2y / self.denom()).max(0.0)
    }

    pub fn cov(&self) -> f64 {
        self.cxy / self.denom()
    }

    /// Mean of `x − λ (y − y_mean_exact)` and its standard error.
    pub fn control_variate(&self, lambda: f64, y_exact: f64) -> (f64, f64) {
        let est = self.mean_x - lambda * (self.mean_y - y_exact);
        let var = self.var_x() - 2.0 * lambda * self.cov() + lambda * lambda * self.var_y();
        (est, (var.max(0.0) / self.n.max(1) as f64).sqrt())
    }

    /// Variance-minimising control-variate coefficient `Cov(x, y) / Var(y)`.
    pub fn optimal_lambda(&self) -> f64 {
        let vy = self.var_y();
        if vy > 0.0 {
            self.cov() / vy
        } else {
            0.0
        }
    }

    /// Ratio `mean(x)/mean(y)` with a delta-method standard error.
    pub fn ratio(&self) -> Result<(f64, f64)> {
        if self.mean_y == 0.0 || !self.mean_y.is_finite() {
            return Err(Error::Estimation(
                "self-normalised estimator has a zero denominator".into(),
            ));
        }
        let r = self.mean_x / self.mean_y;
        let var = self.var_x() - 2.0 * r * self.cov() + r * r * self.var_y();
        let se = (var.max(0.0) / self.n.max(1) as f64).sqrt() / self.mean_y.abs();
        Ok((r, se))
    }
}

/// Aggregated estimate of one pricing run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub price: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub acceptance_rate: Option<f64>,
    pub samples: u64,
    pub wall_seconds: f64,
}

impl RunResult {
    pub fn from_estimate(price: f64, std_error: f64, samples: u64) -> Self {
        RunResult {
            price,
            std_error,
            ci_low: price - Z95 * std_error,
            ci_high: price + Z95 * std_error,
            acceptance_rate: None,
            samples,
            wall_seconds: 0.0,
        }
    }

    pub fn from_moments(m: &Moments) -> Self {
        Self::from_estimate(m.mean(), m.std_error(), m.count())
    }

    pub fn with_acceptance(mut self, rate: f64) -> Self {
        self.acceptance_rate = Some(rate);
        self
    }

    pub fn with_wall_seconds(mut self, secs: f64) -> Self {
        self.wall_seconds = secs;
        self
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }

    pub fn overlaps(&self, other: &RunResult) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

/// Merge per-worker partial moments in worker order into a run summary.
pub fn stats_reduce(partials: &[Moments]) -> Result<RunResult> {
    let mut total = Moments::default();
    for p in partials {
        total.merge(p);
    }
    if total.count() < 2 {
        return Err(Error::Estimation(format!(
            "need at least 2 samples, got {}",
            total.count()
        )));
    }
    Ok(RunResult::from_moments(&total))
}
