//! CSV rows for single pricing runs. Wall time is kept out of the files so
//! that fixed-seed runs produce identical bytes.

use crate::error::{Error, Result};
use crate::stats::RunResult;

pub const RESULT_HEADER: [&str; 8] = [
    "label",
    "price",
    "std_error",
    "ci_low",
    "ci_high",
    "acceptance_rate",
    "samples",
    "seed",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub label: String,
    pub result: RunResult,
    pub seed: u64,
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Numeric(format!("csv i/o failed: {e}"))
}

pub fn write_results_csv<W: std::io::Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_HEADER).map_err(csv_err)?;
    for row in rows {
        let r = &row.result;
        w.write_record([
            row.label.clone(),
            r.price.to_string(),
            r.std_error.to_string(),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
            r.acceptance_rate.map(|a| a.to_string()).unwrap_or_default(),
            r.samples.to_string(),
            row.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

pub fn read_results_csv<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers().map_err(csv_err)?.clone();
    if headers.iter().ne(RESULT_HEADER) {
        return Err(Error::config("csv", "unexpected header row"));
    }
    let num = |s: &str, field: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::config(field, format!("cannot parse `{s}`")))
    };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let acc = match &rec[5] {
            "" => None,
            s => Some(num(s, "acceptance_rate")?),
        };
        rows.push(ResultRow {
            label: rec[0].to_string(),
            result: RunResult {
                price: num(&rec[1], "price")?,
                std_error: num(&rec[2], "std_error")?,
                ci_low: num(&rec[3], "ci_low")?,
                ci_high: num(&rec[4], "ci_high")?,
                acceptance_rate: acc,
                samples: rec[6]
                    .parse()
                    .map_err(|_| Error::config("samples", "cannot parse"))?,
                wall_seconds: 0.0,
            },
            seed: rec[7]
                .parse()
                .map_err(|_| Error::config("seed", "cannot parse"))?,
        });
    }
    Ok(rows)
}
