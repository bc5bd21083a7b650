//! Experiment driver behind the command-line front end: configuration,
//! dispatch to the pricing methods, reference tables and CSV output.

mod config;
mod output;
mod tables;

pub use config::{ControlChoice, ExperimentConfig, Method, WeightEstimator, KEYS};
pub use output::{read_results_csv, write_results_csv, ResultRow};
pub use tables::{
    cmd_table, manifest, write_table_csv, ManifestEntry, Quantity, TableReport, TableRow,
    Tolerance, TOLERANCE_MANIFEST_VERSION,
};

use crate::baseline::{trap_kv_price, trap_underlying_samples, ControlMode, GridSpec};
use crate::error::{Error, Result};
use crate::parallel::run_parallel;
use crate::positive::{call_payoff, price_stats, PositiveAlphaModel, PositiveMethod};
use crate::rng::RngStream;
use crate::stats::RunResult;
use crate::zero::{hybrid_price, HybridEstimator, ZeroAlphaModel};
use std::time::Instant;

/// Run the configured pricing method.
pub fn cmd_price(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let started = Instant::now();
    let p = cfg.params;
    let payoff = call_payoff(p.strike);
    let (n, seed, workers) = (cfg.samples, cfg.seed, cfg.workers);
    let result = match cfg.method {
        Method::TrapKv => {
            let mode = match cfg.control {
                ControlChoice::None => ControlMode::None,
                ControlChoice::Fixed(l) => ControlMode::Fixed(l),
                ControlChoice::Fitted => ControlMode::Fitted,
            };
            trap_kv_price(&p, GridSpec::new(cfg.steps)?, mode, n, seed, workers)?
        }
        Method::Exact | Method::UeBound | Method::UeFree => {
            let model = PositiveAlphaModel::new(p)?;
            let method = match cfg.method {
                Method::Exact => PositiveMethod::Exact,
                Method::UeBound => PositiveMethod::UeBound,
                _ => PositiveMethod::UeFree,
            };
            let st = price_stats(&model, &payoff, method, n, seed, workers)?;
            let r = match cfg.estimator {
                WeightEstimator::Mean => st.delta1()?,
                WeightEstimator::Ratio => st.delta2()?,
            };
            if method == PositiveMethod::Exact {
                r
            } else {
                RunResult {
                    acceptance_rate: None,
                    ..r
                }
            }
        }
        Method::Hybrid => {
            let model = ZeroAlphaModel::new(p)?;
            let est = match cfg.control {
                ControlChoice::None => HybridEstimator::Plain,
                ControlChoice::Fixed(l) => HybridEstimator::Control(Some(l)),
                ControlChoice::Fitted => HybridEstimator::Control(None),
            };
            hybrid_price(&model, &cfg.hybrid, &payoff, est, n, seed, workers)?
        }
    };
    if !result.price.is_finite() || !result.std_error.is_finite() {
        return Err(Error::Numeric(format!("non-finite estimate {}", result.price)));
    }
    Ok(result.with_wall_seconds(started.elapsed().as_secs_f64()))
}

/// Two histograms on a common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub centers: Vec<f64>,
    /// Exact draws of `α·S_T + β·∫S`.
    pub exact: Vec<u64>,
    /// Lognormal draws of `S_T`.
    pub lognormal: Vec<u64>,
}

/// Exact draws of the underlying and lognormal reference draws of `S_T`.
pub fn histogram_samples(cfg: &ExperimentConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.params.validate()?;
    let model = PositiveAlphaModel::new(cfg.params)?;
    let exact: Vec<f64> = run_parallel(cfg.samples, cfg.seed, cfg.workers, |rng, _, acc: &mut Vec<f64>| {
        acc.push(model.sample_underlying(rng)?);
        Ok(())
    })?;
    let p = cfg.params;
    let mut rng = RngStream::substream(cfg.seed, u64::MAX, 0);
    let sd = p.vol * p.maturity.sqrt();
    let lognormal = (0..cfg.samples)
        .map(|_| p.spot * (p.gamma() * p.maturity + sd * rng.normal()).exp())
        .collect();
    Ok((exact, lognormal))
}

/// Bin both samples on `bins` equal cells spanning their joint range.
pub fn histogram(exact: &[f64], lognormal: &[f64], bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::config("bins", "need at least one bin"));
    }
    let all = exact.iter().chain(lognormal);
    let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::config("samples", "histogram needs at least one draw"));
    }
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let index = |x: f64| (((x - lo) / width) as usize).min(bins - 1);
    let mut h = Histogram {
        centers: (0..bins).map(|i| lo + (i as f64 + 0.5) * width).collect(),
        exact: vec![0; bins],
        lognormal: vec![0; bins],
    };
    for &x in exact {
        h.exact[index(x)] += 1;
    }
    for &x in lognormal {
        h.lognormal[index(x)] += 1;
    }
    Ok(h)
}

/// Histogram data for the configured `α > 0` model.
pub fn cmd_histogram(cfg: &ExperimentConfig, bins: usize) -> Result<Histogram> {
    let (exact, lognormal) = histogram_samples(cfg)?;
    histogram(&exact, &lognormal, bins)
}

pub fn write_histogram_csv<W: std::io::Write>(h: &Histogram, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Numeric(format!("csv output failed: {e}"));
    w.write_record(["bin_center", "exact", "lognormal"]).map_err(io)?;
    for i in 0..h.centers.len() {
        w.write_record([
            h.centers[i].to_string(),
            h.exact[i].to_string(),
            h.lognormal[i].to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Numeric(format!("csv output failed: {e}")))?;
    Ok(())
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Trapezoidal draws of the underlying on a fine grid, for law comparisons.
pub fn trapezoid_reference(cfg: &ExperimentConfig, steps: usize) -> Result<Vec<f64>> {
    trap_underlying_samples(&cfg.params, GridSpec::new(steps)?, cfg.samples, cfg.seed, cfg.workers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bin_holds_everything() {
        let h = histogram(&[1.0, 2.0, 3.0], &[0.5, 4.0], 1).unwrap();
        assert_eq!(h.exact, vec![3]);
        assert_eq!(h.lognormal, vec![2]);
    }

    #[test]
    fn ks_of_identical_and_disjoint_samples() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_distance(&a, &a), 0.0);
        assert_eq!(ks_distance(&a, &[10.0, 11.0]), 1.0);
    }
}
