//! The generalized Poisson estimator of `ψ(Z_T)·exp(−∫φ(Z_t) dt)`.

use super::{EstimatorSample, ExactModel};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::skeleton::PathSkeleton;
use crate::special::{adaptive_simpson, sample_poisson};
use std::f64::consts::PI;

/// Law `p` of the number of product terms.
pub trait CountLaw: Send + Sync {
    fn sample(&self, rng: &mut RngStream) -> Result<u64>;
    /// `−ln(p(n)·n!)`; `+∞` where `p(n) = 0`.
    fn ln_inv_weight(&self, n: u64) -> f64;
}

#[derive(Clone, Copy, Debug)]
pub struct PoissonCount {
    pub mean: f64,
}

impl CountLaw for PoissonCount {
    fn sample(&self, rng: &mut RngStream) -> Result<u64> {
        sample_poisson(self.mean, rng)
    }

    fn ln_inv_weight(&self, n: u64) -> f64 {
        if self.mean == 0.0 {
            return if n == 0 { 0.0 } else { f64::INFINITY };
        }
        self.mean - n as f64 * self.mean.ln()
    }
}

/// `p(n) = s·(1 − s)^n`.
#[derive(Clone, Copy, Debug)]
pub struct GeometricCount {
    pub success: f64,
}

impl CountLaw for GeometricCount {
    fn sample(&self, rng: &mut RngStream) -> Result<u64> {
        let s = self.success;
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::domain(format!("geometric success probability {s}")));
        }
        if s == 1.0 {
            return Ok(0);
        }
        Ok((rng.uniform_pos().ln() / (1.0 - s).ln()).floor() as u64)
    }

    fn ln_inv_weight(&self, n: u64) -> f64 {
        let s = self.success;
        if s == 1.0 {
            return if n == 0 { 0.0 } else { f64::INFINITY };
        }
        -s.ln() - n as f64 * (1.0 - s).ln() - libm::lgamma(n as f64 + 1.0)
    }
}

/// Density `q` of the product times on `[0, T]`.
pub trait TimeDensity: Send + Sync {
    fn density(&self, t: f64) -> f64;
    fn sample(&self, rng: &mut RngStream) -> f64;
}

#[derive(Clone, Copy, Debug)]
pub struct UniformTime {
    pub horizon: f64,
}

impl TimeDensity for UniformTime {
    fn density(&self, t: f64) -> f64 {
        if (0.0..=self.horizon).contains(&t) {
            1.0 / self.horizon
        } else {
            0.0
        }
    }

    fn sample(&self, rng: &mut RngStream) -> f64 {
        self.horizon * rng.uniform()
    }
}

const TABLE_CELLS: usize = 256;

/// Density proportional to `|g|` on `[0, T]`, sampled by tabulated inversion.
pub struct TabulatedTime {
    g: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    horizon: f64,
    total: f64,
    /// Cumulative mass at the cell edges, starting at zero.
    cumulative: Vec<f64>,
}

impl TabulatedTime {
    pub fn new(g: impl Fn(f64) -> f64 + Send + Sync + 'static, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::domain(format!("horizon must be > 0, got {horizon}")));
        }
        let h = horizon / TABLE_CELLS as f64;
        let abs_g = |t: f64| g(t).abs();
        let mut cumulative = Vec::with_capacity(TABLE_CELLS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for i in 0..TABLE_CELLS {
            let a = i as f64 * h;
            acc += adaptive_simpson(&abs_g, a, a + h, 1e-10 / TABLE_CELLS as f64);
            cumulative.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(Error::domain(format!("integral of |g| is {acc}")));
        }
        Ok(TabulatedTime {
            g: Box::new(g),
            horizon,
            total: acc,
            cumulative,
        })
    }

    /// `∫₀ᵀ |g|`.
    pub fn total(&self) -> f64 {
        self.total
    }
}

impl TimeDensity for TabulatedTime {
    fn density(&self, t: f64) -> f64 {
        if (0.0..=self.horizon).contains(&t) {
            (self.g)(t).abs() / self.total
        } else {
            0.0
        }
    }

    fn sample(&self, rng: &mut RngStream) -> f64 {
        let target = rng.uniform() * self.total;
        let cell = (self.cumulative.partition_point(|&c| c <= target) - 1).min(TABLE_CELLS - 1);
        let h = self.horizon / TABLE_CELLS as f64;
        let (mut lo, mut hi) = (cell as f64 * h, (cell + 1) as f64 * h);
        let rest = target - self.cumulative[cell];
        let a = lo;
        let abs_g = |t: f64| (self.g)(t).abs();
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if adaptive_simpson(&abs_g, a, mid, 1e-13) < rest {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Variance-optimal count and time laws for a product of `g` over `[0, T]`.
pub struct OptimalLaws {
    pub count: PoissonCount,
    pub time: TabulatedTime,
}

impl OptimalLaws {
    pub fn integral(&self) -> f64 {
        self.time.total
    }
}

/// `q(t) = |g(t)| / ∫|g|` and `p = Poisson(∫|g|)`.
pub fn optimal_count_time_laws(
    g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    horizon: f64,
) -> Result<OptimalLaws> {
    let time = TabulatedTime::new(g, horizon)?;
    Ok(OptimalLaws {
        count: PoissonCount { mean: time.total },
        time,
    })
}

/// How the count law is chosen for each proposal.
pub enum CountRule {
    Fixed(Box<dyn CountLaw>),
    /// `Poisson(M·T)` with `M` the bound above the recorded path minimum.
    MatchedToBound,
}

/// The shift `c` of the product terms.
#[derive(Clone, Copy, Debug)]
pub enum ShiftRule {
    Constant(f64),
    /// `c = M + k` with `M` the bound above the recorded path minimum.
    BoundPlusFloor,
}

pub struct UeChoices {
    pub count: CountRule,
    pub time: Box<dyn TimeDensity>,
    pub shift: ShiftRule,
}

impl UeChoices {
    fn needs_minimum(&self) -> bool {
        matches!(self.count, CountRule::MatchedToBound)
            || matches!(self.shift, ShiftRule::BoundPlusFloor)
    }
}

/// `e^{−cT}·(1/(p(N)·N!))·∏ (c − φ(V_i))/q(V_i)` for one draw of `N` and the
/// `V_i`, with `φ` evaluated lazily along a path. Returns the factor and `N`.
pub fn generalized_poisson_factor(
    horizon: f64,
    shift: f64,
    count: &dyn CountLaw,
    time: &dyn TimeDensity,
    rng: &mut RngStream,
    mut phi_at: impl FnMut(f64, &mut RngStream) -> Result<f64>,
) -> Result<(f64, u64)> {
    let n = count.sample(rng)?;
    let ln_inv = count.ln_inv_weight(n);
    if ln_inv == f64::INFINITY {
        return Err(Error::InvalidChoices(format!("count law has p({n}) = 0")));
    }
    let mut prod = 1.0;
    for _ in 0..n {
        let v = time.sample(rng);
        let q = time.density(v);
        if !(q > 0.0) {
            return Err(Error::InvalidChoices(format!("time density vanishes at {v}")));
        }
        prod *= (shift - phi_at(v, rng)?) / q;
    }
    Ok(((ln_inv - shift * horizon).exp() * prod, n))
}

/// One draw of the generalized Poisson estimator for `E[f(X_T)]`.
pub fn ue_sample<M: ExactModel + ?Sized>(
    model: &M,
    payoff: &dyn Fn(f64) -> f64,
    choices: &UeChoices,
    rng: &mut RngStream,
) -> Result<EstimatorSample> {
    let x0 = model.start();
    let t = model.horizon();
    let draw = model.sample_reference(rng);
    let z = draw.value;

    let mut sk = PathSkeleton::new(0.0, x0);
    sk.push(t, z)?;
    let bound = if choices.needs_minimum() {
        let (_, m) = sk.condition_on_minimum(0.0, t, rng)?;
        let b = model.bound_above(m);
        if !b.is_finite() || b < 0.0 {
            return Err(Error::Model(format!("bound above the minimum {m} is {b}")));
        }
        b
    } else {
        0.0
    };
    let shift = match choices.shift {
        ShiftRule::Constant(c) => c,
        ShiftRule::BoundPlusFloor => bound + model.potential_floor(),
    };
    let matched;
    let count: &dyn CountLaw = match &choices.count {
        CountRule::Fixed(law) => law.as_ref(),
        CountRule::MatchedToBound => {
            matched = PoissonCount { mean: bound * t };
            &matched
        }
    };

    let (factor, n) = generalized_poisson_factor(
        t,
        shift,
        count,
        choices.time.as_ref(),
        rng,
        |v, rng| Ok(model.potential(sk.value_at(v, rng)?)),
    )?;

    let dz = z - x0;
    let ln_psi = model.drift_primitive(z) - model.drift_primitive(x0) - dz * dz / (2.0 * t)
        - 0.5 * (2.0 * PI * t).ln()
        - draw.ln_density;
    let unit = ln_psi.exp() * factor;
    let weight = payoff(z) * unit;
    if !weight.is_finite() || !unit.is_finite() {
        return Err(Error::Model(format!("non-finite weight at Z_T = {z}")));
    }
    Ok(EstimatorSample {
        weight,
        unit_weight: unit,
        control: None,
        accepted: true,
        poisson_count: n,
        retries: 0,
        skeleton_size: sk.len(),
    })
}

/// [`ue_sample`] with `p = Poisson(c_P·T)`, uniform times and a constant shift.
pub fn ue_poisson_variant<M: ExactModel + ?Sized>(
    model: &M,
    payoff: &dyn Fn(f64) -> f64,
    c_p: f64,
    shift: f64,
    rng: &mut RngStream,
) -> Result<EstimatorSample> {
    if !(c_p > 0.0 && c_p.is_finite()) {
        return Err(Error::domain(format!("Poisson rate must be > 0, got {c_p}")));
    }
    let t = model.horizon();
    let choices = UeChoices {
        count: CountRule::Fixed(Box::new(PoissonCount { mean: c_p * t })),
        time: Box::new(UniformTime { horizon: t }),
        shift: ShiftRule::Constant(shift),
    };
    ue_sample(model, payoff, &choices, rng)
}
