//! Reference tables with their tolerance manifest.

use crate::baseline::{trap_kv_price, ControlMode, GridSpec};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::positive::{call_payoff, path_acceptance_rate, price_stats, PositiveAlphaModel, PositiveMethod};
use crate::parallel::run_parallel;
use crate::stats::RunResult;
use crate::zero::{hybrid_price, HybridConfig, HybridEstimator, ZeroAlphaModel};
use std::fmt;

/// Bumped whenever a reference value or tolerance changes.
pub const TOLERANCE_MANIFEST_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Quantity {
    Price,
    /// Acceptance rate in percent.
    AcceptancePct,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tolerance {
    /// Our 95% interval must meet the reference interval.
    CiOverlap { low: f64, high: f64 },
    Absolute(f64),
    Relative(f64),
    /// Within this many of our standard errors.
    StdErrors(f64),
    /// Within standard errors and inside a band.
    StdErrorsInBand { k: f64, low: f64, high: f64 },
}

impl Tolerance {
    pub fn check(&self, reference: f64, r: &RunResult) -> bool {
        let est = r.price;
        match *self {
            Tolerance::CiOverlap { low, high } => r.ci_low <= high && low <= r.ci_high,
            Tolerance::Absolute(a) => (est - reference).abs() <= a,
            Tolerance::Relative(q) => (est - reference).abs() <= q * reference.abs(),
            Tolerance::StdErrors(k) => (est - reference).abs() <= k * r.std_error,
            Tolerance::StdErrorsInBand { k, low, high } => {
                (est - reference).abs() <= k * r.std_error && (low..=high).contains(&est)
            }
        }
    }
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Tolerance::CiOverlap { low, high } => write!(f, "ci overlaps [{low}, {high}]"),
            Tolerance::Absolute(a) => write!(f, "+-{a}"),
            Tolerance::Relative(q) => write!(f, "+-{}%", q * 100.0),
            Tolerance::StdErrors(k) => write!(f, "{k} se"),
            Tolerance::StdErrorsInBand { k, low, high } => write!(f, "{k} se and in [{low}, {high}]"),
        }
    }
}

/// One line of the manifest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManifestEntry {
    pub table: u8,
    pub row: &'static str,
    pub quantity: Quantity,
    pub reference: f64,
    pub tolerance: Tolerance,
    /// Samples or attempts at scale one.
    pub base_samples: u64,
}

const fn entry(
    table: u8,
    row: &'static str,
    quantity: Quantity,
    reference: f64,
    tolerance: Tolerance,
    base_samples: u64,
) -> ManifestEntry {
    ManifestEntry {
        table,
        row,
        quantity,
        reference,
        tolerance,
        base_samples,
    }
}

use Quantity::{AcceptancePct, Price};

const fn band(low: f64, high: f64) -> Tolerance {
    Tolerance::CiOverlap { low, high }
}

const MANIFEST: &[ManifestEntry] = &[
    entry(1, "trap-kv M=10", Price, 11.46, band(11.43, 11.49), 1_000_000),
    entry(1, "trap-kv M=20", Price, 11.46, band(11.43, 11.49), 1_000_000),
    entry(1, "trap-kv M=50", Price, 11.47, band(11.44, 11.50), 1_000_000),
    entry(1, "exact", Price, 11.46, band(11.43, 11.50), 1_000_000),
    entry(1, "exact acceptance", AcceptancePct, 24.0, Tolerance::Absolute(2.0), 1_000_000),
    entry(1, "ue-bound", Price, 11.46, band(11.43, 11.49), 1_000_000),
    entry(1, "ue-free", Price, 11.46, band(11.43, 11.49), 1_000_000),
    entry(2, "ratio 0.3", AcceptancePct, 0.003, Tolerance::Relative(0.5), 10_000_000),
    entry(2, "ratio 0.4", AcceptancePct, 0.47, Tolerance::Relative(0.5), 10_000_000),
    entry(2, "ratio 0.5", AcceptancePct, 5.66, Tolerance::Absolute(1.0), 1_000_000),
    entry(2, "ratio 0.6", AcceptancePct, 24.43, Tolerance::Absolute(1.5), 1_000_000),
    entry(2, "ratio 0.7", AcceptancePct, 53.85, Tolerance::Absolute(2.0), 1_000_000),
    entry(3, "eps=T/2^2", Price, 6.9394, Tolerance::StdErrors(3.0), 1_000_000),
    entry(3, "eps=T/2^4", Price, 6.9590, Tolerance::StdErrors(3.0), 1_000_000),
    entry(3, "eps=T/2^6", Price, 6.9703, Tolerance::StdErrors(3.0), 1_000_000),
    entry(3, "eps=T/2^8", Price, 6.9952, Tolerance::StdErrors(3.0), 1_000_000),
    entry(
        3,
        "eps=T/2^10",
        Price,
        7.0423,
        Tolerance::StdErrorsInBand { k: 3.0, low: 7.00, high: 7.09 },
        1_000_000,
    ),
    entry(4, "ratio 0.2", AcceptancePct, 61.0, Tolerance::Absolute(3.0), 1_000_000),
    entry(4, "ratio 0.5", AcceptancePct, 68.0, Tolerance::Absolute(3.0), 1_000_000),
    entry(4, "ratio 0.8", AcceptancePct, 80.0, Tolerance::Absolute(3.0), 1_000_000),
];

/// Reference values and tolerances of every table.
pub fn manifest() -> &'static [ManifestEntry] {
    MANIFEST
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub entry: ManifestEntry,
    pub result: RunResult,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableReport {
    pub table: u8,
    pub rows: Vec<TableRow>,
}

impl TableReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

impl fmt::Display for TableReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "table {} (tolerance manifest v{TOLERANCE_MANIFEST_VERSION})", self.table)?;
        writeln!(
            f,
            "{:<18} {:>12} {:>10} {:>25} {:>10} {:>9} {:<28} {}",
            "row", "estimate", "se", "95% ci", "reference", "n", "tolerance", "status"
        )?;
        for r in &self.rows {
            let ci = format!("[{:.4}, {:.4}]", r.result.ci_low, r.result.ci_high);
            writeln!(
                f,
                "{:<18} {:>12.5} {:>10.5} {:>25} {:>10} {:>9} {:<28} {}",
                r.entry.row,
                r.result.price,
                r.result.std_error,
                ci,
                r.entry.reference,
                r.result.samples,
                r.entry.tolerance.to_string(),
                if r.pass { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

fn scaled(base: u64, scale: f64) -> u64 {
    ((base as f64 * scale).round() as u64).max(2)
}

/// Acceptance percentage as a run result with a binomial standard error.
fn rate_result(rate: f64, n: u64) -> RunResult {
    let se = (rate * (1.0 - rate) / n as f64).sqrt();
    RunResult::from_estimate(100.0 * rate, 100.0 * se, n)
}

fn weighted(alpha: f64, beta: f64) -> ModelParams {
    ModelParams {
        alpha,
        beta,
        ..ModelParams::weighted_benchmark()
    }
}

/// Parameters of the terminal-density acceptance table.
pub fn envelope_params(ratio: f64) -> ModelParams {
    ModelParams {
        spot: 100.0,
        rate: 0.1,
        dividend: 0.0,
        vol: 0.3,
        maturity: 2.0,
        alpha: ratio,
        beta: 1.0 - ratio,
        strike: 100.0,
    }
}

fn ratio_of(row: &str) -> f64 {
    row.trim_start_matches("ratio ").parse().unwrap_or(f64::NAN)
}

fn run_row(e: &ManifestEntry, scale: f64, seed: u64, workers: usize) -> Result<RunResult> {
    let n = scaled(e.base_samples, scale);
    match e.table {
        1 => {
            let p = ModelParams::weighted_benchmark();
            let call = call_payoff(p.strike);
            if let Some(m) = e.row.strip_prefix("trap-kv M=") {
                let steps = m.parse().map_err(|_| Error::config("steps", m.to_string()))?;
                return trap_kv_price(&p, GridSpec::new(steps)?, ControlMode::Fixed(1.0), n, seed, workers);
            }
            let model = PositiveAlphaModel::new(p)?;
            let method = match e.row {
                "ue-bound" => PositiveMethod::UeBound,
                "ue-free" => PositiveMethod::UeFree,
                _ => PositiveMethod::Exact,
            };
            if e.row == "exact acceptance" {
                return Ok(rate_result(path_acceptance_rate(&model, n, seed, workers)?, n));
            }
            price_stats(&model, &call, method, n, seed, workers)?.delta1()
        }
        2 => {
            let r = ratio_of(e.row);
            let model = PositiveAlphaModel::new(weighted(r, 1.0 - r))?;
            Ok(rate_result(path_acceptance_rate(&model, n, seed, workers)?, n))
        }
        3 => {
            let model = ZeroAlphaModel::new(ModelParams::asian_benchmark())?;
            let power: u32 = e.row.trim_start_matches("eps=T/2^").parse().unwrap_or(10);
            let cfg = HybridConfig {
                levels: power - 1,
                ..HybridConfig::default()
            };
            let call = call_payoff(100.0);
            hybrid_price(&model, &cfg, &call, HybridEstimator::Control(Some(1.0)), n, seed, workers)
        }
        4 => {
            let model = PositiveAlphaModel::new(envelope_params(ratio_of(e.row)))?;
            let hits: Vec<u8> = run_parallel(n, seed, workers, |rng, _, acc: &mut Vec<u8>| {
                acc.push(model.h_trial(rng).is_some() as u8);
                Ok(())
            })?;
            let rate = hits.iter().map(|&h| h as u64).sum::<u64>() as f64 / n as f64;
            Ok(rate_result(rate, n))
        }
        t => Err(Error::config("table", format!("unknown table {t}"))),
    }
}

/// Run every row of table `id` at `scale` times the manifest sample counts.
/// Statistical misses are reported per row, never raised.
pub fn cmd_table(id: u8, scale: f64, seed: u64, workers: usize) -> Result<TableReport> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::config("scale", format!("must lie in (0, 1], got {scale}")));
    }
    if !(1..=4).contains(&id) {
        return Err(Error::config("table", format!("expected 1 to 4, got {id}")));
    }
    let mut rows = Vec::new();
    for e in MANIFEST.iter().filter(|e| e.table == id) {
        let result = run_row(e, scale, seed, workers)?;
        let pass = e.tolerance.check(e.reference, &result);
        rows.push(TableRow {
            entry: *e,
            result,
            pass,
        });
    }
    Ok(TableReport { table: id, rows })
}

pub fn write_table_csv<W: std::io::Write>(report: &TableReport, out: W) -> Result<()> {
    let err = |e: csv::Error| Error::Numeric(format!("csv output failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "table", "row", "quantity", "estimate", "std_error", "ci_low", "ci_high", "samples",
        "reference", "tolerance", "pass",
    ])
    .map_err(err)?;
    for r in &report.rows {
        let q = match r.entry.quantity {
            Quantity::Price => "price",
            Quantity::AcceptancePct => "acceptance_pct",
        };
        w.write_record([
            report.table.to_string(),
            r.entry.row.to_string(),
            q.to_string(),
            r.result.price.to_string(),
            r.result.std_error.to_string(),
            r.result.ci_low.to_string(),
            r.result.ci_high.to_string(),
            r.result.samples.to_string(),
            r.entry.reference.to_string(),
            r.entry.tolerance.to_string(),
            r.pass.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Numeric(format!("csv output failed: {e}")))
}
