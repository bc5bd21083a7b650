//! The Gaussian auxiliary process `Z_t = (σ/t)·B_{t³/3} + (γ/2)·t`.
//!
//! `B` is a standard Brownian motion on the internal clock `s = t³/3`; its
//! skeleton is stored in a [`PathSkeleton`] so that bridge and
//! minimum-conditioned fill-in are shared with the homogeneous engine.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::skeleton::PathSkeleton;

/// Internal clock of `B` for calendar time `t`.
#[inline]
pub fn internal_clock(t: f64) -> f64 {
    t * t * t / 3.0
}

/// The process `Z` backed by a skeleton of `B` in internal clock.
#[derive(Clone, Debug)]
pub struct ZPath {
    sigma: f64,
    gamma: f64,
    b: PathSkeleton,
}

impl ZPath {
    /// Start `B` at the origin and draw it forward at the internal-clock images
    /// of `anchors`, which must be positive and strictly increasing.
    pub fn forward(sigma: f64, gamma: f64, anchors: &[f64], rng: &mut RngStream) -> Result<Self> {
        let mut b = PathSkeleton::new(0.0, 0.0);
        for &t in anchors {
            if !(t > 0.0) {
                return Err(Error::domain(format!("Z anchor times must be > 0, got {t}")));
            }
            b.extend_free(internal_clock(t), rng)?;
        }
        Ok(ZPath { sigma, gamma, b })
    }

    /// Wrap an existing skeleton of `B` (internal clock, origin at `(0, 0)`).
    pub fn from_skeleton(sigma: f64, gamma: f64, b: PathSkeleton) -> Self {
        ZPath { sigma, gamma, b }
    }

    pub fn b_skeleton(&self) -> &PathSkeleton {
        &self.b
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `Z` from a value of `B` at the internal-clock image of `t`.
    #[inline]
    pub fn z_from_b(&self, t: f64, b: f64) -> f64 {
        self.sigma / t * b + 0.5 * self.gamma * t
    }

    /// `Z_t`, filling `B` at `t³/3` from its conditional law when needed.
    pub fn value_at(&mut self, t: f64, rng: &mut RngStream) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("Z is only queried at t > 0, got {t}")));
        }
        let b = self.b.value_at(internal_clock(t), rng)?;
        Ok(self.z_from_b(t, b))
    }

    /// Record the minimum of `B` over the internal-clock image of `[t_left, t_right]`
    /// (both anchors) and return it.
    pub fn condition_on_minimum(
        &mut self,
        t_left: f64,
        t_right: f64,
        rng: &mut RngStream,
    ) -> Result<f64> {
        let (_, m) = self.b.condition_on_minimum(
            internal_clock(t_left),
            internal_clock(t_right),
            rng,
        )?;
        Ok(m)
    }
}

/// `Z` at `times` given a skeleton of `B` stored in internal clock.
pub fn z_process_values(
    b_skeleton: &mut PathSkeleton,
    times: &[f64],
    gamma: f64,
    sigma: f64,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    times
        .iter()
        .map(|&t| {
            if !(t > 0.0) {
                return Err(Error::domain(format!("Z is only queried at t > 0, got {t}")));
            }
            let b = b_skeleton.value_at(internal_clock(t), rng)?;
            Ok(sigma / t * b + 0.5 * gamma * t)
        })
        .collect()
}
