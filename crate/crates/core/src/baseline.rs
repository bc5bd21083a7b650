//! Trapezoidal discretization with a geometric-average control variate.

use crate::error::{Error, Result};
use crate::parallel::run_parallel;
use crate::params::ModelParams;
use crate::rng::RngStream;
use crate::special::{adaptive_simpson, norm_cdf, norm_pdf};
use crate::stats::{Moments, PairMoments, RunResult};

/// Uniform time grid with `steps` intervals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub steps: usize,
}

impl GridSpec {
    pub fn new(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::config("steps", "need at least one time step"));
        }
        Ok(GridSpec { steps })
    }

    /// Trapezoid weights of the time average: `1/(2M)` at the ends, `1/M` inside.
    fn weight(&self, i: usize) -> f64 {
        let m = self.steps as f64;
        if i == 0 || i == self.steps {
            0.5 / m
        } else {
            1.0 / m
        }
    }
}

/// Gaussian moments of the trapezoidal time average of `σW_t + γt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricMoments {
    pub mean: f64,
    pub variance: f64,
    /// Covariance with `σW_T`.
    pub covariance: f64,
}

pub fn discrete_geometric_moments(params: &ModelParams, grid: GridSpec) -> GeometricMoments {
    let t = params.maturity;
    let dt = t / grid.steps as f64;
    let s2 = params.vol * params.vol;
    // Increment k (over [t_{k-1}, t_k]) loads on every node i ≥ k.
    let mut tail = 0.0;
    let mut sum_sq = 0.0;
    for k in (1..=grid.steps).rev() {
        tail += grid.weight(k);
        sum_sq += tail * tail;
    }
    let time_moment: f64 = (0..=grid.steps).map(|i| grid.weight(i) * i as f64 * dt).sum();
    GeometricMoments {
        mean: params.gamma() * time_moment,
        variance: s2 * dt * sum_sq,
        covariance: s2 * time_moment,
    }
}

/// `E[(w·e^G − K)⁺]` for `G ~ N(m, v)`, `w ≥ 0`.
fn lognormal_call(w: f64, m: f64, v: f64, strike: f64) -> f64 {
    let forward = w * (m + 0.5 * v).exp();
    if strike <= 0.0 {
        return forward - strike;
    }
    if w == 0.0 {
        return 0.0;
    }
    if v <= 0.0 {
        return (w * m.exp() - strike).max(0.0);
    }
    let sd = v.sqrt();
    let d2 = (m + (w / strike).ln()) / sd;
    forward * norm_cdf(d2 + sd) - strike * norm_cdf(d2)
}

/// Exact mean of the discrete control `e^{−rT}(α·S_T + β·T·e^G − K)⁺`.
pub fn control_mean(params: &ModelParams, grid: GridSpec) -> Result<f64> {
    let gm = discrete_geometric_moments(params, grid);
    let t = params.maturity;
    let ln_s0 = params.spot.ln();
    let (a, b, k) = (params.alpha, params.beta, params.strike);
    let sd_l = params.vol * t.sqrt();
    let mu_l = ln_s0 + params.gamma() * t;
    let mu_g = ln_s0 + gm.mean;
    let value = if b == 0.0 {
        lognormal_call(a, mu_l, sd_l * sd_l, k)
    } else if a == 0.0 {
        lognormal_call(b * t, mu_g, gm.variance, k)
    } else {
        let slope = gm.covariance / (sd_l * sd_l);
        let v_cond = (gm.variance - slope * gm.covariance).max(0.0);
        // Conditional on log S_T the call is nearly kinked where its forward
        // meets the strike (v_cond ≪ σ²T), which a fixed Gauss–Hermite rule
        // under-resolves. Integrate adaptively on both sides of that point.
        let lm = |x: f64| (mu_l + sd_l * x, mu_g + slope * sd_l * x);
        let inner = |x: f64| {
            let (l, m) = lm(x);
            lognormal_call(b * t, m, v_cond, k - a * l.exp()) * norm_pdf(x)
        };
        let excess = |x: f64| {
            let (l, m) = lm(x);
            a * l.exp() + b * t * (m + 0.5 * v_cond).exp() - k
        };
        let (lo, hi) = (-12.0, 12.0);
        let split = if excess(lo) < 0.0 && excess(hi) > 0.0 {
            let (mut a, mut c) = (lo, hi);
            for _ in 0..100 {
                let mid = 0.5 * (a + c);
                if excess(mid) < 0.0 {
                    a = mid;
                } else {
                    c = mid;
                }
            }
            0.5 * (a + c)
        } else {
            0.0
        };
        adaptive_simpson(&inner, lo, split, 1e-12) + adaptive_simpson(&inner, split, hi, 1e-12)
    };
    if !value.is_finite() {
        return Err(Error::Numeric("control mean quadrature is not finite".into()));
    }
    Ok(params.discount() * value)
}

/// How the control variate enters the baseline estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ControlMode {
    None,
    Fixed(f64),
    Fitted,
}

/// One trapezoidal path.
struct TrapPath {
    s_t: f64,
    /// Trapezoid approximation of `∫₀ᵀ S_t dt`.
    integral: f64,
    /// Trapezoid average of `σW_t + γt`.
    log_average: f64,
}

fn trap_path(params: &ModelParams, grid: GridSpec, rng: &mut RngStream) -> TrapPath {
    let m = grid.steps;
    let dt = params.maturity / m as f64;
    let (sigma, gamma) = (params.vol, params.gamma());
    let sq = dt.sqrt();
    let mut x = 0.0;
    let mut sum = 0.5;
    let mut geo = 0.0;
    for i in 1..=m {
        x += sigma * sq * rng.normal() + gamma * dt;
        let w = grid.weight(i);
        sum += w * m as f64 * x.exp();
        geo += w * x;
    }
    TrapPath {
        s_t: params.spot * x.exp(),
        integral: params.spot * sum * dt,
        log_average: geo,
    }
}

impl TrapPath {
    fn underlying(&self, p: &ModelParams) -> f64 {
        p.alpha * self.s_t + p.beta * self.integral
    }

    fn payoff(&self, p: &ModelParams) -> f64 {
        p.discount() * (self.underlying(p) - p.strike).max(0.0)
    }

    fn control(&self, p: &ModelParams) -> f64 {
        let proxy = p.alpha * self.s_t + p.beta * p.maturity * p.spot * self.log_average.exp();
        p.discount() * (proxy - p.strike).max(0.0)
    }
}

/// Trapezoidal Monte Carlo price of the call on `α·S_T + β·∫S`.
pub fn trap_kv_price(
    params: &ModelParams,
    grid: GridSpec,
    mode: ControlMode,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<RunResult> {
    params.validate()?;
    if n < 2 {
        return Err(Error::config("samples", "need at least 2 paths"));
    }
    let pm: PairMoments = run_parallel(n, seed, workers, |rng, _, acc: &mut PairAcc| {
        let path = trap_path(params, grid, rng);
        acc.0.push(path.payoff(params), path.control(params));
        Ok(())
    })?
    .0;
    Ok(match mode {
        ControlMode::None => RunResult::from_moments(&pm.x_moments()),
        ControlMode::Fixed(l) => {
            let (est, se) = pm.control_variate(l, control_mean(params, grid)?);
            RunResult::from_estimate(est, se, n)
        }
        ControlMode::Fitted => {
            let (est, se) = pm.control_variate(pm.optimal_lambda(), control_mean(params, grid)?);
            RunResult::from_estimate(est, se, n)
        }
    })
}

#[derive(Default)]
struct PairAcc(PairMoments);

impl crate::parallel::Accumulator for PairAcc {
    fn merge(&mut self, other: Self) {
        self.0.merge(&other.0);
    }
}

/// Draws of `α·S_T + β·∫₀ᵀS` with the integral by trapezoid.
pub fn trap_underlying_samples(
    params: &ModelParams,
    grid: GridSpec,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<f64>> {
    run_parallel(n, seed, workers, |rng, _, acc: &mut Vec<f64>| {
        acc.push(trap_path(params, grid, rng).underlying(params));
        Ok(())
    })
}

/// Direct trapezoidal price of the floating-strike put `e^{−rT}(Ā − S_T)⁺`.
pub fn trap_floating_strike_price(
    params: &ModelParams,
    grid: GridSpec,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<RunResult> {
    params.validate()?;
    if n < 2 {
        return Err(Error::config("samples", "need at least 2 paths"));
    }
    let disc = params.discount();
    let m: Moments = run_parallel(n, seed, workers, |rng, _, acc: &mut MomentAcc| {
        let path = trap_path(params, grid, rng);
        let mean = path.integral / params.maturity;
        acc.0.push(disc * (mean - path.s_t).max(0.0));
        Ok(())
    })?
    .0;
    Ok(RunResult::from_moments(&m))
}

#[derive(Default)]
struct MomentAcc(Moments);

impl crate::parallel::Accumulator for MomentAcc {
    fn merge(&mut self, other: Self) {
        self.0.merge(&other.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_trapezoid() {
        let p = ModelParams::asian_benchmark();
        let g = discrete_geometric_moments(&p, GridSpec::new(1).unwrap());
        assert!((g.mean - p.gamma() / 2.0).abs() < 1e-15);
        assert!((g.variance - 0.04 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn fine_grid_limits() {
        let p = ModelParams::asian_benchmark();
        let g = discrete_geometric_moments(&p, GridSpec::new(1000).unwrap());
        assert!((g.variance - 0.04 / 3.0).abs() < 1e-5);
        assert!((g.covariance - 0.02).abs() < 1e-5);
    }

    #[test]
    fn zero_steps_rejected() {
        assert!(GridSpec::new(0).is_err());
    }

    #[test]
    fn lognormal_call_limits() {
        assert!((lognormal_call(1.0, 0.0, 0.0, 0.5) - 0.5).abs() < 1e-15);
        assert!((lognormal_call(2.0, 0.0, 0.04, -1.0) - (2.0 * 0.02f64.exp() + 1.0)).abs() < 1e-12);
    }
}
