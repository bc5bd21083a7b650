//! Closed-form toy models used to check the engines.

use super::{ExactModel, TerminalDraw};
use crate::error::Result;
use crate::rng::RngStream;
use std::f64::consts::PI;

/// Driftless model whose potential is frozen at a constant level.
///
/// The terminal law `h` is `N(start, horizon)`, so every estimator reduces to
/// averages of `exp(−level·T)`-type quantities with closed forms. The potential
/// is decoupled from the (zero) drift on purpose; this is a test hook, not
/// a diffusion.
#[derive(Clone, Copy, Debug)]
pub struct FlatPotentialModel {
    pub level: f64,
    pub floor: f64,
    pub start: f64,
    pub horizon: f64,
}

impl FlatPotentialModel {
    pub fn new(level: f64, floor: f64, start: f64, horizon: f64) -> Self {
        FlatPotentialModel {
            level,
            floor,
            start,
            horizon,
        }
    }

    fn gaussian(&self, rng: &mut RngStream) -> TerminalDraw {
        let n = rng.normal();
        let t = self.horizon;
        TerminalDraw {
            value: self.start + t.sqrt() * n,
            ln_density: -0.5 * n * n - 0.5 * (2.0 * PI * t).ln(),
            attempts: 1,
        }
    }
}

impl ExactModel for FlatPotentialModel {
    fn start(&self) -> f64 {
        self.start
    }
    fn horizon(&self) -> f64 {
        self.horizon
    }
    fn drift(&self, _u: f64) -> f64 {
        0.0
    }
    fn drift_primitive(&self, _u: f64) -> f64 {
        0.0
    }
    fn potential(&self, _u: f64) -> f64 {
        self.level
    }
    fn potential_floor(&self) -> f64 {
        self.floor
    }
    fn bound_above(&self, _m: f64) -> f64 {
        self.level - self.floor
    }
    fn sample_terminal(&self, rng: &mut RngStream) -> Result<TerminalDraw> {
        Ok(self.gaussian(rng))
    }
    fn sample_reference(&self, rng: &mut RngStream) -> TerminalDraw {
        self.gaussian(rng)
    }
}
