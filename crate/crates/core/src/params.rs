//! Black–Scholes model and payoff constants.

use crate::error::{Error, Result};

/// Model and payoff constants. The underlying of the option is
/// `α·S_T + β·∫₀ᵀ S_t dt` and the payoff a call on it with strike `K`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub spot: f64,
    pub rate: f64,
    pub dividend: f64,
    pub vol: f64,
    pub maturity: f64,
    pub alpha: f64,
    pub beta: f64,
    pub strike: f64,
}

impl ModelParams {
    /// Parameter set of the weighted terminal/average call benchmark.
    pub fn weighted_benchmark() -> Self {
        ModelParams {
            spot: 100.0,
            rate: 0.05,
            dividend: 0.0,
            vol: 0.3,
            maturity: 1.0,
            alpha: 0.6,
            beta: 0.4,
            strike: 100.0,
        }
    }

    /// Continuously averaged Asian call benchmark (`α = 0`, `β = 1/T`).
    pub fn asian_benchmark() -> Self {
        ModelParams {
            spot: 100.0,
            rate: 0.1,
            dividend: 0.0,
            vol: 0.2,
            maturity: 1.0,
            alpha: 0.0,
            beta: 1.0,
            strike: 100.0,
        }
    }

    /// Log-drift `γ = r − δ − σ²/2` of the stock.
    #[inline]
    pub fn gamma(&self) -> f64 {
        self.rate - self.dividend - 0.5 * self.vol * self.vol
    }

    #[inline]
    pub fn discount(&self) -> f64 {
        (-self.rate * self.maturity).exp()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("spot", self.spot),
            ("rate", self.rate),
            ("dividend", self.dividend),
            ("vol", self.vol),
            ("maturity", self.maturity),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("strike", self.strike),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::config(name, format!("must be finite, got {v}")));
            }
        }
        if !(self.spot > 0.0) {
            return Err(Error::config("spot", "must be > 0"));
        }
        if !(self.vol > 0.0) {
            return Err(Error::config("vol", "must be > 0"));
        }
        if !(self.maturity > 0.0) {
            return Err(Error::config("maturity", "must be > 0"));
        }
        if self.alpha < 0.0 {
            return Err(Error::config("alpha", "must be >= 0"));
        }
        if self.beta < 0.0 {
            return Err(Error::config("beta", "must be >= 0"));
        }
        if self.alpha == 0.0 && self.beta == 0.0 {
            return Err(Error::config("beta", "alpha and beta cannot both be zero"));
        }
        Ok(())
    }

    /// `E[α S_T + β ∫₀ᵀ S_t dt]` under the pricing measure.
    pub fn underlying_mean(&self) -> f64 {
        let g = self.rate - self.dividend;
        let t = self.maturity;
        let integral = if g.abs() < 1e-12 {
            self.spot * t
        } else {
            self.spot * ((g * t).exp() - 1.0) / g
        };
        self.alpha * self.spot * (g * t).exp() + self.beta * integral
    }
}
