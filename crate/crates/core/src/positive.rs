//! The `α > 0` case: `ξ = α·S + β·∫S` becomes a unit-diffusion
//! `X = ln(ξ)/σ` with drift `a(u) = γ/σ + (β·S0/σ)·e^{−σu}`.

use crate::engine::{
    exact_attempt, exact_simulate_terminal, ue_poisson_variant, ue_sample, CountRule,
    EstimatorSample, ExactModel, ExactOptions, SampleStats, ShiftRule, TerminalDraw, UeChoices,
    UniformTime,
};
use crate::error::{Error, Result};
use crate::parallel::run_parallel;
use crate::params::ModelParams;
use crate::rng::RngStream;
use crate::special::lambert_w0;
use crate::stats::RunResult;
use std::f64::consts::PI;

/// Pricing method for the `α > 0` model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PositiveMethod {
    /// Exact rejection sampling of `X_T`.
    Exact,
    /// Unbiased estimator with `p = Poisson(M·T)` and `c = M + k`.
    UeBound,
    /// Unbiased estimator with `p = Poisson(1)` and `c = 1/T`.
    UeFree,
}

/// Unit-diffusion form of the weighted average.
#[derive(Clone, Debug)]
pub struct PositiveAlphaModel {
    params: ModelParams,
    gamma: f64,
    x0: f64,
    /// `β·S0`.
    b: f64,
    k: f64,
    mode: f64,
    /// Maximum of the log ratio of `h` to its Gaussian proposal.
    envelope: f64,
    retry_cap: u64,
}

/// `φ(u)` for log drift `γ`, volatility `σ` and `b = β·S0`.
#[inline]
fn phi_of(gamma: f64, sigma: f64, b: f64, u: f64) -> f64 {
    let e = b * (-sigma * u).exp();
    let a = (gamma + e) / sigma;
    0.5 * (a * a - e)
}

/// Infimum of `φ` over the real line.
pub fn lower_bound_k(params: &ModelParams) -> Result<f64> {
    let sigma = params.vol;
    if !(sigma > 0.0) {
        return Err(Error::domain(format!("volatility must be > 0, got {sigma}")));
    }
    let b = params.beta * params.spot;
    if b < 0.0 {
        return Err(Error::domain("β·S0 must be nonnegative"));
    }
    let g = params.gamma();
    let limit = g * g / (2.0 * sigma * sigma);
    if b == 0.0 || 2.0 * g >= sigma * sigma {
        return Ok(limit);
    }
    let u = (2.0 * b / (sigma * sigma - 2.0 * g)).ln() / sigma;
    Ok(phi_of(g, sigma, b, u))
}

/// Mode `u*` of the terminal density `h`.
pub fn h_mode(params: &ModelParams) -> Result<f64> {
    let sigma = params.vol;
    let g = params.gamma();
    let t = params.maturity;
    let x0 = (params.alpha * params.spot).ln() / sigma;
    let arg = params.beta * params.spot * t * (-g * t - sigma * x0).exp();
    Ok((g * t + lambert_w0(arg)? + sigma * x0) / sigma)
}

impl PositiveAlphaModel {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        if !(params.alpha > 0.0) {
            return Err(Error::domain(format!("α must be > 0, got {}", params.alpha)));
        }
        let sigma = params.vol;
        let gamma = params.gamma();
        let x0 = (params.alpha * params.spot).ln() / sigma;
        let k = lower_bound_k(&params)?;
        let mode = h_mode(&params)?;
        let mut model = PositiveAlphaModel {
            params,
            gamma,
            x0,
            b: params.beta * params.spot,
            k,
            mode,
            envelope: 0.0,
            retry_cap: ExactOptions::default().retry_cap,
        };
        model.envelope = model.envelope_peak()?.1;
        Ok(model)
    }

    pub fn with_retry_cap(mut self, cap: u64) -> Self {
        self.retry_cap = cap;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn mode(&self) -> f64 {
        self.mode
    }

    /// `ξ = e^{σx}`.
    pub fn underlying(&self, x: f64) -> f64 {
        (self.params.vol * x).exp()
    }

    /// `sup { φ(u) − k : u ≥ m }`.
    ///
    /// In `y = e^{−σu}` the potential is a convex quadratic, so its supremum
    /// over `y ∈ (0, e^{−σm}]` sits at an endpoint: `φ(m)` or the limit
    /// `γ²/(2σ²)` as `u → ∞`.
    pub fn sup_phi_above(&self, m: f64) -> f64 {
        let s = self.params.vol;
        let limit = self.gamma * self.gamma / (2.0 * s * s);
        self.potential(m).max(limit) - self.k
    }

    /// Log ratio of the unnormalised `h` to the `N(u*, T)` density, up to a
    /// constant.
    fn log_ratio(&self, u: f64) -> f64 {
        let t = self.params.maturity;
        self.drift_primitive(u) - (self.mode - self.x0) * (2.0 * u - self.x0 - self.mode) / (2.0 * t)
    }

    /// Maximiser and maximum of the concave log ratio, by Newton's method
    /// safeguarded with a bracket.
    fn envelope_peak(&self) -> Result<(f64, f64)> {
        let t = self.params.maturity;
        let slope = |u: f64| self.drift(u) + (self.x0 - self.mode) / t;
        let curv = |u: f64| -self.b * (-self.params.vol * u).exp();
        let mut u = self.mode;
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for _ in 0..200 {
            let d = slope(u);
            if d.abs() <= 1e-13 * (1.0 + self.drift(u).abs()) {
                return Ok((u, self.log_ratio(u)));
            }
            if d > 0.0 {
                lo = u;
            } else {
                hi = u;
            }
            let c = curv(u);
            let mut next = if c < 0.0 { u - d / c } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => 0.5 * (lo + hi),
                    (true, false) => lo + 1.0 + (u - lo).abs() * 2.0,
                    (false, true) => hi - 1.0 - (hi - u).abs() * 2.0,
                    (false, false) => u,
                };
            }
            u = next;
        }
        if self.b == 0.0 {
            return Ok((self.mode, self.log_ratio(self.mode)));
        }
        Err(Error::Numeric("envelope maximisation did not converge".into()))
    }

    fn proposal(&self, rng: &mut RngStream) -> TerminalDraw {
        let t = self.params.maturity;
        let n = rng.normal();
        TerminalDraw {
            value: self.mode + t.sqrt() * n,
            ln_density: -0.5 * n * n - 0.5 * (2.0 * PI * t).ln(),
            attempts: 1,
        }
    }

    /// One envelope trial for `h`; `None` on rejection.
    pub fn h_trial(&self, rng: &mut RngStream) -> Option<TerminalDraw> {
        let d = self.proposal(rng);
        if self.b == 0.0 {
            return Some(d);
        }
        let ln_u = rng.uniform_pos().ln();
        (ln_u <= self.log_ratio(d.value) - self.envelope).then_some(d)
    }

    /// Exact draw from `h` by rejection from `N(u*, T)`.
    pub fn sample_h(&self, rng: &mut RngStream) -> Result<TerminalDraw> {
        let mut attempts = 0u64;
        loop {
            attempts += 1;
            if let Some(d) = self.h_trial(rng) {
                return Ok(TerminalDraw { attempts, ..d });
            }
            if attempts >= self.retry_cap {
                return Err(Error::Divergence { retries: attempts });
            }
        }
    }

    /// Fraction of envelope trials accepted over `attempts` trials.
    pub fn h_acceptance_rate(&self, attempts: u64, rng: &mut RngStream) -> f64 {
        let hits = (0..attempts).filter(|_| self.h_trial(rng).is_some()).count();
        hits as f64 / attempts.max(1) as f64
    }

    /// Exact draw of `ξ_T`.
    pub fn sample_underlying(&self, rng: &mut RngStream) -> Result<f64> {
        let opts = ExactOptions {
            retry_cap: self.retry_cap,
        };
        Ok(self.underlying(exact_simulate_terminal(self, &opts, rng)?.value))
    }

    /// One draw of the discounted payoff with the chosen method.
    pub fn price_sample(
        &self,
        payoff: &dyn Fn(f64) -> f64,
        method: PositiveMethod,
        rng: &mut RngStream,
    ) -> Result<EstimatorSample> {
        let disc = self.params.discount();
        let f = |x: f64| disc * payoff(self.underlying(x));
        match method {
            PositiveMethod::Exact => {
                let opts = ExactOptions {
                    retry_cap: self.retry_cap,
                };
                let d = exact_simulate_terminal(self, &opts, rng)?;
                Ok(EstimatorSample {
                    weight: f(d.value),
                    unit_weight: 1.0,
                    control: None,
                    accepted: true,
                    poisson_count: d.poisson_count,
                    retries: d.retries,
                    skeleton_size: d.skeleton.len(),
                })
            }
            PositiveMethod::UeBound => {
                let choices = UeChoices {
                    count: CountRule::MatchedToBound,
                    time: Box::new(UniformTime {
                        horizon: self.params.maturity,
                    }),
                    shift: ShiftRule::BoundPlusFloor,
                };
                ue_sample(self, &f, &choices, rng)
            }
            PositiveMethod::UeFree => {
                let c = 1.0 / self.params.maturity;
                ue_poisson_variant(self, &f, c, c, rng)
            }
        }
    }
}

impl ExactModel for PositiveAlphaModel {
    fn start(&self) -> f64 {
        self.x0
    }

    fn horizon(&self) -> f64 {
        self.params.maturity
    }

    fn drift(&self, u: f64) -> f64 {
        let s = self.params.vol;
        (self.gamma + self.b * (-s * u).exp()) / s
    }

    fn drift_primitive(&self, u: f64) -> f64 {
        let s = self.params.vol;
        self.gamma / s * u - self.b / (s * s) * (-s * u).exp_m1()
    }

    fn potential(&self, u: f64) -> f64 {
        phi_of(self.gamma, self.params.vol, self.b, u)
    }

    fn potential_floor(&self) -> f64 {
        self.k
    }

    fn bound_above(&self, m: f64) -> f64 {
        self.sup_phi_above(m)
    }

    fn sample_terminal(&self, rng: &mut RngStream) -> Result<TerminalDraw> {
        self.sample_h(rng)
    }

    fn sample_reference(&self, rng: &mut RngStream) -> TerminalDraw {
        self.proposal(rng)
    }
}

/// Run `n` draws on `workers` threads and return the merged statistics.
pub fn price_stats(
    model: &PositiveAlphaModel,
    payoff: &(dyn Fn(f64) -> f64 + Sync),
    method: PositiveMethod,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<SampleStats> {
    run_parallel(n, seed, workers, |rng, _, acc: &mut SampleStats| {
        acc.push(&model.price_sample(payoff, method, rng)?);
        Ok(())
    })
}

/// Price `E[e^{−rT}·payoff(ξ_T)]` as a plain sample mean.
pub fn price_option(
    model: &PositiveAlphaModel,
    payoff: &(dyn Fn(f64) -> f64 + Sync),
    method: PositiveMethod,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<RunResult> {
    price_stats(model, payoff, method, n, seed, workers)?.delta1()
}

/// Fraction of accepted proposals of the path rejection sampler.
pub fn path_acceptance_rate(
    model: &PositiveAlphaModel,
    attempts: u64,
    seed: u64,
    workers: usize,
) -> Result<f64> {
    let hits: Vec<u8> = run_parallel(attempts, seed, workers, |rng, _, acc: &mut Vec<u8>| {
        acc.push(exact_attempt(model, rng)?.is_some() as u8);
        Ok(())
    })?;
    Ok(hits.iter().map(|&h| h as u64).sum::<u64>() as f64 / attempts.max(1) as f64)
}

/// Floating-strike put `E[e^{−rT}(Ā − S_T)⁺]` as a fixed-strike problem.
///
/// Under the share measure `S` has log drift `γ' = r − δ + σ²/2`, and
/// `Ā/S_T` is the average of a geometric Brownian motion started at one with
/// log drift `−γ'`. The returned parameters swap `r` and `δ` and set
/// `α = 0`, `β = 1/T`, `K = S0`; their call price equals the original price.
pub fn floating_strike_reduce(params: &ModelParams) -> Result<ModelParams> {
    params.validate()?;
    Ok(ModelParams {
        rate: params.dividend,
        dividend: params.rate,
        alpha: 0.0,
        beta: 1.0 / params.maturity,
        strike: params.spot,
        ..*params
    })
}

/// Call payoff `(x − K)⁺`.
pub fn call_payoff(strike: f64) -> impl Fn(f64) -> f64 + Sync + Copy {
    move |x| (x - strike).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> PositiveAlphaModel {
        PositiveAlphaModel::new(ModelParams::weighted_benchmark()).unwrap()
    }

    #[test]
    fn floor_at_benchmark() {
        let m = table1();
        assert!((m.gamma() - 0.005).abs() < 1e-12);
        assert!((m.potential_floor() + 0.00875).abs() < 1e-12);
    }

    #[test]
    fn mode_is_stationary() {
        let m = table1();
        let t = m.params().maturity;
        let u = m.mode();
        assert!((m.drift(u) - (u - m.x0()) / t).abs() < 1e-10);
        let (peak, _) = m.envelope_peak().unwrap();
        assert!((peak - u).abs() < 1e-9);
    }

    #[test]
    fn pure_geometric_case_accepts_everything() {
        let p = ModelParams {
            beta: 0.0,
            ..ModelParams::weighted_benchmark()
        };
        let m = PositiveAlphaModel::new(p).unwrap();
        let expect = m.x0() + m.gamma() * p.maturity / p.vol;
        assert!((m.mode() - expect).abs() < 1e-12);
        let mut rng = RngStream::new(4);
        assert_eq!(m.h_acceptance_rate(10_000, &mut rng), 1.0);
    }

    #[test]
    fn zero_alpha_is_rejected() {
        let p = ModelParams::asian_benchmark();
        assert!(PositiveAlphaModel::new(p).is_err());
    }

    #[test]
    fn primitive_matches_drift() {
        let m = table1();
        for i in -20..=40 {
            let u = i as f64;
            let h = 1e-5;
            let fd = (m.drift_primitive(u + h) - m.drift_primitive(u - h)) / (2.0 * h);
            assert!((fd - m.drift(u)).abs() <= 1e-6 * m.drift(u).abs().max(1.0));
        }
    }

    #[test]
    fn reduction_swaps_rates() {
        let p = ModelParams {
            dividend: 0.03,
            ..ModelParams::weighted_benchmark()
        };
        let r = floating_strike_reduce(&p).unwrap();
        assert_eq!((r.rate, r.dividend), (0.03, 0.05));
        assert_eq!((r.alpha, r.strike), (0.0, p.spot));
        let g_prime = p.rate - p.dividend + 0.5 * p.vol * p.vol;
        assert!((r.gamma() + g_prime).abs() < 1e-15);
    }
}
