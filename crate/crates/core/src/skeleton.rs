//! Finite skeletons of Brownian paths.
//!
//! A [`PathSkeleton`] stores the path at a strictly increasing set of times.
//! Each gap between consecutive knots carries the conditional law of the path
//! inside it: either a plain Brownian bridge, or one side of a path whose
//! minimum over a segment has been recorded. In the latter case the excursion
//! above the minimum is a three-dimensional Bessel bridge, represented as the
//! norm of a 3-d Brownian bridge whose coordinates are kept at every knot so
//! that later fill-ins stay jointly consistent with earlier ones.

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Law of the path between two consecutive knots.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Gap {
    Bridge,
    /// `w(t) = floor + |v(t)|` with `v` a 3-d Brownian bridge from `left` to `right`.
    Bessel {
        floor: f64,
        left: [f64; 3],
        right: [f64; 3],
    },
}

/// Sorted knots `(time, value)` of a Brownian path plus the law of each gap.
#[derive(Clone, Debug)]
pub struct PathSkeleton {
    times: Vec<f64>,
    values: Vec<f64>,
    gaps: Vec<Gap>,
    minima: Vec<(f64, f64)>,
}

/// Minimum of a Brownian bridge from `w_start` to `w_end` over duration `dt`,
/// together with the offset of its location from the start.
///
/// The value comes from inverting `P(min ≤ m) = exp(-2 (w_start - m)(w_end - m) / dt)`.
/// Given the value, `(dt - θ)/θ` is a two-component mixture of an inverse
/// Gaussian and the reciprocal of another.
pub fn bridge_minimum(
    w_start: f64,
    w_end: f64,
    dt: f64,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::domain(format!("bridge duration must be > 0, got {dt}")));
    }
    let b = w_end - w_start;
    let e = rng.exponential();
    let m_rel = 0.5 * (b - (b * b + 2.0 * dt * e).sqrt());
    let m = (w_start + m_rel).min(w_start).min(w_end);

    let c1 = (b - m_rel) * (b - m_rel) / (2.0 * dt);
    let c2 = m_rel * m_rel / (2.0 * dt);
    let theta = if c2 <= 0.0 {
        0.0
    } else if c1 <= 0.0 {
        dt
    } else {
        let ratio = (c1 / c2).sqrt();
        let z = if rng.uniform() < 1.0 / (1.0 + ratio) {
            inverse_gaussian(ratio, 2.0 * c1, rng)
        } else {
            1.0 / inverse_gaussian(1.0 / ratio, 2.0 * c2, rng)
        };
        dt / (1.0 + z)
    };
    let pad = dt * 8.0 * f64::EPSILON;
    Ok((m, theta.clamp(pad, dt - pad)))
}

/// Inverse Gaussian draw with the given mean and shape (Michael–Schucany–Haas),
/// using the product of the roots to avoid cancellation.
fn inverse_gaussian(mean: f64, shape: f64, rng: &mut RngStream) -> f64 {
    let n = rng.normal();
    let y = n * n;
    let my = mean * y;
    let big = mean + mean * my / (2.0 * shape)
        + mean / (2.0 * shape) * (4.0 * shape * my + my * my).sqrt();
    let small = mean * mean / big;
    if rng.uniform() * (mean + small) <= mean {
        small
    } else {
        big
    }
}

/// Brownian bridge interpolation at fraction `(t - tl)/(tr - tl)`.
#[inline]
fn bridge_draw(tl: f64, tr: f64, t: f64, wl: f64, wr: f64, rng: &mut RngStream) -> f64 {
    let span = tr - tl;
    let mean = wl + (t - tl) / span * (wr - wl);
    let var = (t - tl) * (tr - t) / span;
    mean + var.max(0.0).sqrt() * rng.normal()
}

impl PathSkeleton {
    /// A skeleton holding the single anchor point `(t0, w0)`.
    pub fn new(t0: f64, w0: f64) -> Self {
        PathSkeleton {
            times: vec![t0],
            values: vec![w0],
            gaps: Vec::new(),
            minima: Vec::new(),
        }
    }

    /// Skeleton through the given knots, joined by plain Brownian bridges.
    pub fn from_knots(times: &[f64], values: &[f64]) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::domain("knot arrays must be non-empty and of equal length"));
        }
        let mut sk = PathSkeleton::new(times[0], values[0]);
        for (&t, &w) in times.iter().zip(values).skip(1) {
            sk.push(t, w)?;
        }
        Ok(sk)
    }

    /// Append a knot after the last one; the new gap is a plain bridge.
    pub fn push(&mut self, t: f64, w: f64) -> Result<()> {
        let last = *self.times.last().expect("skeleton is never empty");
        if !(t > last) || !w.is_finite() {
            return Err(Error::domain(format!(
                "appended knot ({t}, {w}) must lie after t={last} with a finite value"
            )));
        }
        self.times.push(t);
        self.values.push(w);
        self.gaps.push(Gap::Bridge);
        Ok(())
    }

    /// Append a knot `dt` after the last one, drawn from free Brownian motion.
    pub fn extend_free(&mut self, t: f64, rng: &mut RngStream) -> Result<f64> {
        let last_t = *self.times.last().expect("skeleton is never empty");
        let last_w = *self.values.last().expect("skeleton is never empty");
        let dt = t - last_t;
        if !(dt > 0.0) {
            return Err(Error::domain(format!("free extension to {t} is not after {last_t}")));
        }
        let w = last_w + dt.sqrt() * rng.normal();
        self.push(t, w)?;
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn origin(&self) -> (f64, f64) {
        (self.times[0], self.values[0])
    }

    pub fn end(&self) -> (f64, f64) {
        let i = self.times.len() - 1;
        (self.times[i], self.values[i])
    }

    /// Lowest recorded minimum as `(time, value)`, if any segment was conditioned.
    pub fn minimum(&self) -> Option<(f64, f64)> {
        self.minima
            .iter()
            .copied()
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// All recorded segment minima as `(time, value)`.
    pub fn minima(&self) -> &[(f64, f64)] {
        &self.minima
    }

    fn knot_index(&self, t: f64) -> Option<usize> {
        self.times.binary_search_by(|x| x.total_cmp(&t)).ok()
    }

    /// Record the minimum of the path between the knots at `t_left` and `t_right`,
    /// which must be adjacent and joined by a plain bridge.
    ///
    /// Returns `(min_time, min_value)`; the minimum becomes a knot and both new
    /// gaps switch to the minimum-respecting law.
    pub fn condition_on_minimum(
        &mut self,
        t_left: f64,
        t_right: f64,
        rng: &mut RngStream,
    ) -> Result<(f64, f64)> {
        let i = self
            .knot_index(t_left)
            .ok_or_else(|| Error::domain(format!("no knot at t={t_left}")))?;
        if i + 1 >= self.times.len() || self.times[i + 1] != t_right {
            return Err(Error::domain(format!(
                "knots at {t_left} and {t_right} are not adjacent"
            )));
        }
        if self.gaps[i] != Gap::Bridge {
            return Err(Error::domain(format!(
                "gap [{t_left}, {t_right}] already carries a recorded minimum"
            )));
        }
        let (wl, wr) = (self.values[i], self.values[i + 1]);
        let (m, offset) = bridge_minimum(wl, wr, t_right - t_left, rng)?;
        let tm = t_left + offset;
        self.times.insert(i + 1, tm);
        self.values.insert(i + 1, m);
        self.gaps[i] = Gap::Bessel {
            floor: m,
            left: [wl - m, 0.0, 0.0],
            right: [0.0; 3],
        };
        self.gaps.insert(
            i + 1,
            Gap::Bessel {
                floor: m,
                left: [0.0; 3],
                right: [wr - m, 0.0, 0.0],
            },
        );
        self.minima.push((tm, m));
        Ok((tm, m))
    }

    /// Path value at `t`, drawn from the conditional law given the skeleton
    /// and inserted as a new knot. Existing knots are returned unchanged.
    pub fn value_at(&mut self, t: f64, rng: &mut RngStream) -> Result<f64> {
        let (t0, _) = self.origin();
        let (t1, _) = self.end();
        if !(t >= t0 && t <= t1) {
            return Err(Error::domain(format!(
                "time {t} lies outside the skeleton span [{t0}, {t1}]"
            )));
        }
        let pos = self.times.partition_point(|&x| x < t);
        if pos < self.times.len() && self.times[pos] == t {
            return Ok(self.values[pos]);
        }
        let i = pos - 1;
        let (tl, tr) = (self.times[i], self.times[i + 1]);
        match self.gaps[i] {
            Gap::Bridge => {
                let w = bridge_draw(tl, tr, t, self.values[i], self.values[i + 1], rng);
                self.times.insert(i + 1, t);
                self.values.insert(i + 1, w);
                self.gaps.insert(i + 1, Gap::Bridge);
                Ok(w)
            }
            Gap::Bessel { floor, left, right } => {
                let mut v = [0.0; 3];
                for k in 0..3 {
                    v[k] = bridge_draw(tl, tr, t, left[k], right[k], rng);
                }
                let w = floor + (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                self.times.insert(i + 1, t);
                self.values.insert(i + 1, w);
                self.gaps[i] = Gap::Bessel { floor, left, right: v };
                self.gaps.insert(i + 1, Gap::Bessel { floor, left: v, right });
                Ok(w)
            }
        }
    }

    /// Values at sorted `new_times`, each drawn conditionally and inserted.
    pub fn fill(&mut self, new_times: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
        new_times.iter().map(|&t| self.value_at(t, rng)).collect()
    }
}

/// Values of the skeleton path at `new_times`, sampled from the conditional law
/// and inserted into the skeleton.
pub fn fill_conditioned(
    skeleton: &mut PathSkeleton,
    new_times: &[f64],
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    let (t0, _) = skeleton.origin();
    let (t1, _) = skeleton.end();
    if new_times.iter().any(|&t| !(t >= t0 && t <= t1)) {
        return Err(Error::domain("fill times must lie inside the skeleton span"));
    }
    skeleton.fill(new_times, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimum_is_below_endpoints() {
        let mut rng = RngStream::new(5);
        for i in 0..10_000 {
            let a = (i % 7) as f64 * 0.3 - 1.0;
            let b = (i % 5) as f64 * 0.4 - 0.8;
            let (m, off) = bridge_minimum(a, b, 0.7, &mut rng).unwrap();
            assert!(m <= a.min(b));
            assert!(off > 0.0 && off < 0.7);
        }
        assert!(bridge_minimum(0.0, 0.0, 0.0, &mut rng).is_err());
        assert!(bridge_minimum(0.0, 0.0, -1.0, &mut rng).is_err());
    }

    #[test]
    fn reflection_cdf_at_half() {
        let mut rng = RngStream::new(11);
        let n = 200_000;
        let hits = (0..n)
            .filter(|_| bridge_minimum(0.0, 0.0, 1.0, &mut rng).unwrap().0 <= -0.5)
            .count();
        let p = hits as f64 / n as f64;
        let expect = (-0.5f64).exp();
        let se = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!((p - expect).abs() < 4.0 * se, "p={p}");
    }

    #[test]
    fn existing_knots_are_returned_exactly() {
        let mut rng = RngStream::new(3);
        let mut sk = PathSkeleton::from_knots(&[0.0, 1.0], &[0.25, -0.5]).unwrap();
        assert_eq!(sk.value_at(0.0, &mut rng).unwrap(), 0.25);
        assert_eq!(sk.value_at(1.0, &mut rng).unwrap(), -0.5);
        let mid = sk.value_at(0.5, &mut rng).unwrap();
        assert_eq!(sk.value_at(0.5, &mut rng).unwrap(), mid);
        assert_eq!(sk.len(), 3);
    }

    #[test]
    fn outside_span_is_a_domain_error() {
        let mut rng = RngStream::new(3);
        let mut sk = PathSkeleton::from_knots(&[0.0, 1.0], &[0.0, 0.0]).unwrap();
        assert!(sk.value_at(1.5, &mut rng).is_err());
        assert!(sk.value_at(-0.1, &mut rng).is_err());
        assert!(fill_conditioned(&mut sk, &[0.5, 2.0], &mut rng).is_err());
    }

    #[test]
    fn conditioned_fill_respects_minimum() {
        let mut rng = RngStream::new(8);
        for _ in 0..2_000 {
            let mut sk = PathSkeleton::from_knots(&[0.0, 1.0], &[0.0, 0.3]).unwrap();
            let (_, m) = sk.condition_on_minimum(0.0, 1.0, &mut rng).unwrap();
            let times: Vec<f64> = (1..40).map(|k| k as f64 / 40.0).collect();
            let vals = fill_conditioned(&mut sk, &times, &mut rng).unwrap();
            assert!(vals.iter().all(|&v| v >= m));
            assert!(sk.values().iter().all(|&v| v >= m));
            assert_eq!(sk.minimum().unwrap().1, m);
            assert!(sk.times().windows(2).all(|w| w[0] < w[1]));
            assert_eq!(sk.end(), (1.0, 0.3));
            assert_eq!(sk.origin(), (0.0, 0.0));
        }
    }

    #[test]
    fn double_conditioning_is_rejected() {
        let mut rng = RngStream::new(8);
        let mut sk = PathSkeleton::from_knots(&[0.0, 1.0], &[0.0, 0.3]).unwrap();
        let (tm, _) = sk.condition_on_minimum(0.0, 1.0, &mut rng).unwrap();
        assert!(sk.condition_on_minimum(0.0, tm, &mut rng).is_err());
        assert!(sk.condition_on_minimum(0.0, 1.0, &mut rng).is_err());
    }
}
