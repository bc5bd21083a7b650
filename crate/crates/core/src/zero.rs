//! The standard Asian case `α = 0`, priced through the Gaussian process
//! `Z_t = (σ/t)·B_{t³/3} + (γ/2)·t` and the hybrid pseudo-exact scheme.

use crate::engine::{generalized_poisson_factor, EstimatorSample, PoissonCount, SampleStats, UniformTime};
use crate::error::{Error, Result};
use crate::parallel::{run_parallel, Accumulator};
use crate::params::ModelParams;
use crate::rng::RngStream;
use crate::special::{norm_cdf, sample_poisson};
use crate::stats::{Moments, RunResult};
use crate::zpath::ZPath;

/// `(e^{−z} − 1 + z, e^{−z} − 1 + z − z²/2)` without cancellation near zero.
pub fn exp_remainders(z: f64) -> (f64, f64) {
    if z.abs() < 1.0 {
        // Alternating series from the cubic term on.
        let mut term = -z * z * z / 6.0;
        let mut e2 = 0.0f64;
        let mut n = 3.0;
        while term.abs() > 1e-18 * e2.abs() && n < 40.0 {
            e2 += term;
            n += 1.0;
            term *= -z / n;
        }
        (e2 + 0.5 * z * z, e2)
    } else {
        let e1 = (-z).exp_m1() + z;
        (e1, e1 - 0.5 * z * z)
    }
}

/// Configuration of the hybrid scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HybridConfig {
    /// Dyadic depth. Intervals `[T/2^{j+1}, T/2^j]` for `j = 0..=levels`
    /// are bounded exactly; `[0, T/2^{levels+1}]` uses the tail intensity.
    pub levels: u32,
    /// Tail exponent `η ∈ (0, 1/4)`.
    pub eta: f64,
    /// Rate of the Poisson product for `φ⁻`.
    pub c_p: f64,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig {
            levels: 9,
            eta: 0.1,
            c_p: 1.0,
        }
    }
}

impl HybridConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 0.25) {
            return Err(Error::config("eta", format!("must lie in (0, 1/4), got {}", self.eta)));
        }
        if !(self.c_p > 0.0 && self.c_p.is_finite()) {
            return Err(Error::config("c_p", format!("must be > 0, got {}", self.c_p)));
        }
        if self.levels > 60 {
            return Err(Error::config("levels", "must be at most 60"));
        }
        Ok(())
    }

    /// Threshold `ε = T/2^{levels+1}` below which the tail bound is used.
    pub fn threshold(&self, horizon: f64) -> f64 {
        horizon / 2f64.powi(self.levels as i32 + 1)
    }
}

/// The `α = 0` model for a payoff on `β·∫₀ᵀ S_t dt`.
#[derive(Clone, Debug)]
pub struct ZeroAlphaModel {
    params: ModelParams,
    sigma: f64,
    gamma: f64,
    /// `β·T·S0`: the underlying equals `scale·e^{Z_T}` in law under the weight.
    scale: f64,
    frozen: bool,
}

impl ZeroAlphaModel {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        if params.alpha != 0.0 {
            return Err(Error::domain(format!("α must be 0, got {}", params.alpha)));
        }
        Ok(ZeroAlphaModel {
            params,
            sigma: params.vol,
            gamma: params.gamma(),
            scale: params.beta * params.maturity * params.spot,
            frozen: false,
        })
    }

    /// Replace the potential by zero (the weight keeps `A`). Used to check the
    /// scheme against closed forms.
    pub fn with_zero_potential(mut self) -> Self {
        self.frozen = true;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Underlying value `β·T·S0·e^z`.
    pub fn underlying(&self, z: f64) -> f64 {
        self.scale * z.exp()
    }

    /// `A(t, z) = (1 − z + z²/2 − e^{−z})/(σ²t)`.
    pub fn primitive(&self, t: f64, z: f64) -> f64 {
        let (_, e2) = exp_remainders(z);
        -e2 / (self.sigma * self.sigma * t)
    }

    /// `φ(t, z)`.
    pub fn phi(&self, t: f64, z: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("φ needs t > 0, got {t}")));
        }
        if self.frozen {
            return Ok(0.0);
        }
        let s2 = self.sigma * self.sigma;
        let (e1, e2) = exp_remainders(z);
        let one_minus_exp = -(-z).exp_m1();
        Ok(e2 / (s2 * t * t)
            + one_minus_exp / (2.0 * t)
            + e1 / (s2 * t) * (e1 / (2.0 * t) + self.gamma - z / t))
    }

    pub fn phi_plus(&self, t: f64, z: f64) -> Result<f64> {
        Ok(self.phi(t, z)?.max(0.0))
    }

    pub fn phi_minus(&self, t: f64, z: f64) -> Result<f64> {
        Ok((-self.phi(t, z)?).max(0.0))
    }

    /// Upper bound of `φ⁺` on `[t_l, t_u] × [m_j, ∞)`.
    pub fn lemma8_bound(&self, t_l: f64, t_u: f64, m_j: f64) -> f64 {
        lemma8_bound(t_l, t_u, m_j, self.sigma, self.gamma)
    }

    /// Geometric-average call `E[e^{−rT}(β·T·S0·e^{Z_T} − K)⁺]`.
    pub fn control_mean(&self) -> Result<f64> {
        kv_closed_form(self.scale, &self.params, self.params.strike)
    }
}

/// Upper bound of `φ⁺(t, z)` for `t ∈ [t_l, t_u]` and `z ≥ m_j`.
pub fn lemma8_bound(t_l: f64, _t_u: f64, m_j: f64, sigma: f64, gamma: f64) -> f64 {
    let s2 = sigma * sigma;
    let t = t_l;
    let upper = gamma * gamma / s2 + gamma / (s2 * t) + (0.5 - gamma / s2).max(0.0) / t;
    let c = m_j.min(0.0);
    let lower = if c < 0.0 {
        let em1 = (-c).exp_m1();
        ((em1 + c) * (1.0 + gamma.max(0.0) * t) + 0.5 * em1 * em1 - c * c) / (s2 * t * t)
    } else {
        0.0
    };
    upper.max(lower).max(0.0)
}

/// Lower bound for `Z` on `[t_l, t_u]` from a lower bound `m_b` of `B` on the
/// internal-clock image of the interval.
pub fn z_lower_bound(t_l: f64, t_u: f64, m_b: f64, sigma: f64, gamma: f64) -> f64 {
    let drift_t = if gamma >= 0.0 { t_l } else { t_u };
    sigma / t_l * m_b.min(0.0) + 0.5 * gamma * drift_t
}

/// Tail intensity `λ(t) = κ·t^{−1/2−η}` on a neighbourhood of zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailIntensity {
    pub kappa: f64,
    pub eta: f64,
}

impl TailIntensity {
    fn power(&self) -> f64 {
        0.5 - self.eta
    }

    /// `−1/2 − η`.
    pub fn exponent(&self) -> f64 {
        -0.5 - self.eta
    }

    pub fn at(&self, t: f64) -> f64 {
        self.kappa * t.powf(self.exponent())
    }

    /// `Λ(ε) = ∫₀^ε λ`.
    pub fn cumulative(&self, eps: f64) -> f64 {
        self.kappa * eps.powf(self.power()) / self.power()
    }

    /// Time mark of a point of the process on `[0, ε]` by inversion.
    pub fn sample_time(&self, eps: f64, rng: &mut RngStream) -> f64 {
        eps * rng.uniform_pos().powf(1.0 / self.power())
    }
}

pub fn lemma9_tail_intensity(eta: f64, sigma: f64, gamma: f64) -> Result<TailIntensity> {
    if !(eta > 0.0 && eta < 0.25) {
        return Err(Error::domain(format!("η must lie in (0, 1/4), got {eta}")));
    }
    let c = (sigma / 3f64.powf(0.5 - eta / 3.0)).max(0.5 * gamma);
    Ok(TailIntensity {
        kappa: 2.0 * c * c * c / (3.0 * sigma * sigma) + 0.5 * c,
        eta,
    })
}

/// Where a hybrid attempt was rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rejection {
    /// Dyadic interval `j`.
    Interval(usize),
    Tail,
}

/// Result of one hybrid attempt with its diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct HybridOutcome {
    pub sample: EstimatorSample,
    pub rejection: Option<Rejection>,
    /// Times raised to the numeric floor.
    pub clamped: u32,
    /// Dyadic thinning points where `φ⁺` exceeded its bound.
    pub bound_violations: u32,
    /// Tail thinning points where `φ⁺` exceeded the tail intensity.
    pub tail_excess: u32,
    /// `(interval, 1 − e^{−|I_j|·M_j})` for each interval reached.
    pub reached: [(u8, f64); 64],
    pub reached_len: usize,
}

const FLOOR: f64 = 1e-12;

/// One attempt of the hybrid scheme. Rejected attempts carry zero weight; the
/// control `e^{−rT}(β·T·S0·e^{Z_T} − K)⁺` is attached either way.
pub fn hybrid_price_sample(
    model: &ZeroAlphaModel,
    config: &HybridConfig,
    payoff: &dyn Fn(f64) -> f64,
    rng: &mut RngStream,
) -> Result<HybridOutcome> {
    let t_end = model.params.maturity;
    let (sigma, gamma) = (model.sigma, model.gamma);
    let levels = config.levels as usize;
    let eps = config.threshold(t_end);
    let floor = FLOOR * t_end;
    let tail = lemma9_tail_intensity(config.eta, sigma, gamma)?;

    let anchors: Vec<f64> = (0..=levels + 1).rev().map(|j| t_end / 2f64.powi(j as i32)).collect();
    let mut z = ZPath::forward(sigma, gamma, &anchors, rng)?;
    let z_end = z.value_at(t_end, rng)?;

    let mut out = HybridOutcome {
        sample: EstimatorSample {
            weight: 0.0,
            unit_weight: 0.0,
            control: Some(model.params.discount() * (model.underlying(z_end) - model.params.strike).max(0.0)),
            accepted: false,
            poisson_count: 0,
            retries: 0,
            skeleton_size: 0,
        },
        rejection: None,
        clamped: 0,
        bound_violations: 0,
        tail_excess: 0,
        reached: [(0, 0.0); 64],
        reached_len: 0,
    };

    let mut points = 0u64;
    'thin: {
        for j in 0..=levels {
            let t_u = anchors[levels + 1 - j];
            let t_l = anchors[levels - j];
            let m_b = z.condition_on_minimum(t_l, t_u, rng)?;
            let m_j = z_lower_bound(t_l, t_u, m_b, sigma, gamma);
            let bound = model.lemma8_bound(t_l, t_u, m_j);
            let width = t_u - t_l;
            out.reached[out.reached_len] = (j as u8, -(-width * bound).exp_m1());
            out.reached_len += 1;
            let n = sample_poisson(width * bound, rng)?;
            points += n;
            for _ in 0..n {
                let t = t_l + width * rng.uniform();
                let v = bound * rng.uniform();
                let p = model.phi_plus(t, z.value_at(t, rng)?)?;
                if p > bound {
                    out.bound_violations += 1;
                }
                if v <= p {
                    out.rejection = Some(Rejection::Interval(j));
                    break 'thin;
                }
            }
        }
        let n = sample_poisson(tail.cumulative(eps), rng)?;
        points += n;
        for _ in 0..n {
            let mut t = tail.sample_time(eps, rng);
            if t < floor {
                t = floor;
                out.clamped += 1;
            }
            let height = tail.at(t);
            let v = height * rng.uniform();
            let p = model.phi_plus(t, z.value_at(t, rng)?)?;
            if p > height {
                out.tail_excess += 1;
            }
            if v <= p {
                out.rejection = Some(Rejection::Tail);
                break 'thin;
            }
        }
    }

    if out.rejection.is_none() {
        let count = PoissonCount {
            mean: config.c_p * t_end,
        };
        let time = UniformTime { horizon: t_end };
        let mut clamped = 0u32;
        let (factor, n) = generalized_poisson_factor(t_end, 0.0, &count, &time, rng, |u, rng| {
            let u = if u < floor {
                clamped += 1;
                floor
            } else {
                u
            };
            Ok(-model.phi_minus(u, z.value_at(u, rng)?)?)
        })?;
        out.clamped += clamped;
        points += n;
        let unit = (model.primitive(t_end, z_end) - model.params.rate * t_end).exp() * factor;
        let weight = unit * payoff(model.underlying(z_end));
        if !weight.is_finite() {
            return Err(Error::Model(format!("non-finite hybrid weight at Z_T = {z_end}")));
        }
        out.sample.weight = weight;
        out.sample.unit_weight = unit;
        out.sample.accepted = true;
    }
    out.sample.poisson_count = points;
    out.sample.skeleton_size = z.b_skeleton().len();
    Ok(out)
}

/// Merged diagnostics of a hybrid run.
#[derive(Clone, Debug, Default)]
pub struct HybridStats {
    pub samples: SampleStats,
    pub clamped: u64,
    pub bound_violations: u64,
    pub tail_excess: u64,
    pub tail_rejections: u64,
    /// Per interval: attempts reaching it, attempts rejected on it, and the
    /// summed rejection-probability bound.
    pub intervals: Vec<(u64, u64, f64)>,
}

impl HybridStats {
    pub fn push(&mut self, o: &HybridOutcome) {
        self.samples.push(&o.sample);
        self.clamped += o.clamped as u64;
        self.bound_violations += o.bound_violations as u64;
        self.tail_excess += o.tail_excess as u64;
        for &(j, p) in &o.reached[..o.reached_len] {
            let j = j as usize;
            if self.intervals.len() <= j {
                self.intervals.resize(j + 1, (0, 0, 0.0));
            }
            self.intervals[j].0 += 1;
            self.intervals[j].2 += p;
        }
        match o.rejection {
            Some(Rejection::Interval(j)) => self.intervals[j].1 += 1,
            Some(Rejection::Tail) => self.tail_rejections += 1,
            None => {}
        }
    }
}

impl Accumulator for HybridStats {
    fn merge(&mut self, other: Self) {
        self.samples.merge(other.samples);
        self.clamped += other.clamped;
        self.bound_violations += other.bound_violations;
        self.tail_excess += other.tail_excess;
        self.tail_rejections += other.tail_rejections;
        if self.intervals.len() < other.intervals.len() {
            self.intervals.resize(other.intervals.len(), (0, 0, 0.0));
        }
        for (a, b) in self.intervals.iter_mut().zip(other.intervals) {
            a.0 += b.0;
            a.1 += b.1;
            a.2 += b.2;
        }
    }
}

/// How the hybrid draws are turned into a price.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HybridEstimator {
    Plain,
    /// Geometric-average control with a fixed or fitted coefficient.
    Control(Option<f64>),
}

pub fn hybrid_stats(
    model: &ZeroAlphaModel,
    config: &HybridConfig,
    payoff: &(dyn Fn(f64) -> f64 + Sync),
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<HybridStats> {
    config.validate()?;
    run_parallel(n, seed, workers, |rng, _, acc: &mut HybridStats| {
        acc.push(&hybrid_price_sample(model, config, payoff, rng)?);
        Ok(())
    })
}

pub fn hybrid_price(
    model: &ZeroAlphaModel,
    config: &HybridConfig,
    payoff: &(dyn Fn(f64) -> f64 + Sync),
    estimator: HybridEstimator,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<RunResult> {
    let st = hybrid_stats(model, config, payoff, n, seed, workers)?;
    match estimator {
        HybridEstimator::Plain => st.samples.delta1(),
        HybridEstimator::Control(lambda) => st.samples.with_control(lambda, model.control_mean()?),
    }
}

fn kv_closed_form(scale: f64, params: &ModelParams, strike: f64) -> Result<f64> {
    if !(strike > 0.0) {
        return Err(Error::domain(format!("strike must be > 0, got {strike}")));
    }
    let (sigma, t, r) = (params.vol, params.maturity, params.rate);
    if !(sigma > 0.0 && t > 0.0) {
        return Err(Error::domain("σ and T must be > 0"));
    }
    let g = params.gamma();
    let sd = sigma * (t / 3.0).sqrt();
    let d = ((scale / strike).ln() + 0.5 * g * t) / sd;
    Ok(scale * ((0.5 * g + sigma * sigma / 6.0 - r) * t).exp() * norm_cdf(d + sd)
        - strike * (-r * t).exp() * norm_cdf(d))
}

/// `E[e^{−rT}(S0·e^{Z_T} − K)⁺]` with `Z_T ~ N(γT/2, σ²T/3)`.
pub fn kv_control_variate_price(params: &ModelParams, strike: f64) -> Result<f64> {
    kv_closed_form(params.spot, params, strike)
}

/// Which estimator the tail diagnostic inspects.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagnosticTarget {
    /// Poisson product over the signed potential, no thinning.
    Naive,
    Hybrid,
}

/// Evidence of heavy tails in a weight sample.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HeavyTailReport {
    pub samples: u64,
    pub mean: f64,
    /// Spread of the running mean over the second half of the run.
    pub running_mean_range: f64,
    /// Sample variance at `n` over that of the first `n/2` draws.
    pub variance_ratio: f64,
    /// Largest `|w|` over `Σ|w|`.
    pub max_share: f64,
}

fn naive_sample(
    model: &ZeroAlphaModel,
    config: &HybridConfig,
    payoff: &dyn Fn(f64) -> f64,
    rng: &mut RngStream,
) -> Result<f64> {
    let t_end = model.params.maturity;
    let mut z = ZPath::forward(model.sigma, model.gamma, &[t_end], rng)?;
    let z_end = z.value_at(t_end, rng)?;
    let count = PoissonCount {
        mean: config.c_p * t_end,
    };
    let time = UniformTime { horizon: t_end };
    let floor = FLOOR * t_end;
    let (factor, _) = generalized_poisson_factor(t_end, 0.0, &count, &time, rng, |u, rng| {
        let u = u.max(floor);
        model.phi(u, z.value_at(u, rng)?)
    })?;
    Ok((model.primitive(t_end, z_end) - model.params.rate * t_end).exp()
        * factor
        * payoff(model.underlying(z_end)))
}

/// Run `n` draws of the target estimator and summarise their tail behaviour.
/// Diagnostic only; the naive estimator is never used for pricing.
pub fn heavy_tail_diagnostic(
    model: &ZeroAlphaModel,
    config: &HybridConfig,
    target: DiagnosticTarget,
    payoff: &dyn Fn(f64) -> f64,
    n: u64,
    seed: u64,
) -> Result<HeavyTailReport> {
    if n == 0 {
        return Ok(HeavyTailReport::default());
    }
    let mut rng = RngStream::new(seed);
    let mut all = Moments::default();
    let mut half = Moments::default();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut max_abs, mut sum_abs) = (0.0f64, 0.0);
    for i in 0..n {
        let w = match target {
            DiagnosticTarget::Naive => naive_sample(model, config, payoff, &mut rng)?,
            DiagnosticTarget::Hybrid => hybrid_price_sample(model, config, payoff, &mut rng)?.sample.weight,
        };
        all.push(w);
        if i < n / 2 {
            half.push(w);
        } else {
            lo = lo.min(all.mean());
            hi = hi.max(all.mean());
        }
        max_abs = max_abs.max(w.abs());
        sum_abs += w.abs();
    }
    let variance_ratio = if half.count() >= 2 && half.variance() > 0.0 {
        all.variance() / half.variance()
    } else {
        f64::NAN
    };
    Ok(HeavyTailReport {
        samples: n,
        mean: all.mean(),
        running_mean_range: hi - lo,
        variance_ratio,
        max_share: if sum_abs > 0.0 { max_abs / sum_abs } else { 0.0 },
    })
}
