//! Retrospective rejection sampling of the terminal value.

use super::ExactModel;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::skeleton::PathSkeleton;
use crate::special::sample_poisson;

pub const DEFAULT_RETRY_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug)]
pub struct ExactOptions {
    /// Proposals allowed before giving up with a divergence error.
    pub retry_cap: u64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            retry_cap: DEFAULT_RETRY_CAP,
        }
    }
}

/// An accepted draw with the skeleton that certified it.
#[derive(Clone, Debug)]
pub struct ExactDraw {
    pub value: f64,
    pub skeleton: PathSkeleton,
    pub retries: u64,
    /// Poisson points checked on the accepted proposal.
    pub poisson_count: u64,
}

/// One proposal of the rejection loop. Returns the skeleton and the number
/// of Poisson points on acceptance, `None` on rejection.
pub fn exact_attempt<M: ExactModel + ?Sized>(
    model: &M,
    rng: &mut RngStream,
) -> Result<Option<(PathSkeleton, u64)>> {
    let x0 = model.start();
    let t = model.horizon();
    let k = model.potential_floor();
    let end = model.sample_terminal(rng)?.value;

    let mut sk = PathSkeleton::new(0.0, x0);
    sk.push(t, end)?;
    let (_, m) = sk.condition_on_minimum(0.0, t, rng)?;

    let bound = model.bound_above(m);
    if !bound.is_finite() || bound < 0.0 {
        return Err(Error::Model(format!(
            "bound above the minimum {m} is {bound}"
        )));
    }
    let n = sample_poisson(t * bound, rng)?;
    for _ in 0..n {
        let u = t * rng.uniform();
        let v = bound * rng.uniform();
        let z = sk.value_at(u, rng)?;
        if v <= model.potential(z) - k {
            return Ok(None);
        }
    }
    Ok(Some((sk, n)))
}

/// Exact draw of `X_T` by repeating [`exact_attempt`] until acceptance.
pub fn exact_simulate_terminal<M: ExactModel + ?Sized>(
    model: &M,
    opts: &ExactOptions,
    rng: &mut RngStream,
) -> Result<ExactDraw> {
    let mut retries = 0u64;
    loop {
        if let Some((skeleton, poisson_count)) = exact_attempt(model, rng)? {
            let value = skeleton.end().1;
            return Ok(ExactDraw {
                value,
                skeleton,
                retries,
                poisson_count,
            });
        }
        retries += 1;
        if retries >= opts.retry_cap {
            return Err(Error::Divergence { retries });
        }
    }
}

/// Fraction of `attempts` proposals accepted, returned with its binomial
/// standard error.
pub fn acceptance_rate<M: ExactModel + ?Sized>(
    model: &M,
    attempts: u64,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    if attempts == 0 {
        return Err(Error::domain("need at least one attempt"));
    }
    let mut hits = 0u64;
    for _ in 0..attempts {
        if exact_attempt(model, rng)?.is_some() {
            hits += 1;
        }
    }
    let p = hits as f64 / attempts as f64;
    Ok((p, (p * (1.0 - p) / attempts as f64).sqrt()))
}
