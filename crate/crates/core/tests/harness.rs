use asian_retro::harness::{
    cmd_histogram, cmd_price, cmd_table, histogram, read_results_csv, write_histogram_csv,
    write_results_csv, write_table_csv, ExperimentConfig, Method, ResultRow,
};
use asian_retro::parallel::{run_parallel, Accumulator};
use asian_retro::stats::{stats_reduce, Moments};
use asian_retro::{Error, ModelParams, RunResult};
use proptest::prelude::*;

#[test]
fn config_files_parse_with_comments_and_overrides() {
    let text = "# α = 0 run\npreset = asian\nmethod = hybrid\nsamples = 500 # small\nlevels = 5\ncontrol = fitted\nworkers=3\n";
    let cfg = ExperimentConfig::parse(text).unwrap();
    assert_eq!(cfg.method, Method::Hybrid);
    assert_eq!(cfg.params, ModelParams::asian_benchmark());
    assert_eq!((cfg.samples, cfg.hybrid.levels, cfg.workers), (500, 5, 3));
    cfg.validate().unwrap();

    let mut c = ExperimentConfig::default();
    c.set("strike", "90").unwrap();
    assert_eq!(c.params.strike, 90.0);
    assert!(c.set("nonsense", "1").is_err());
}

#[test]
fn config_errors_name_line_and_field() {
    match ExperimentConfig::parse("method = exact\nvol = abc\n") {
        Err(Error::Config { line, field, .. }) => {
            assert_eq!(line, Some(2));
            assert_eq!(field.as_deref(), Some("vol"));
        }
        other => panic!("{other:?}"),
    }
    match ExperimentConfig::parse("samples 10") {
        Err(Error::Config { line: Some(1), .. }) => {}
        other => panic!("{other:?}"),
    }
    let mut c = ExperimentConfig::default();
    c.samples = 1;
    assert!(c.validate().is_err());
    c = ExperimentConfig::default();
    c.method = Method::Hybrid;
    assert!(c.validate().is_err());
    assert_eq!(Error::config("x", "y").exit_code(), 2);
}

#[test]
fn two_sample_smoke_runs() {
    for method in [Method::TrapKv, Method::Exact, Method::UeBound, Method::UeFree, Method::Hybrid] {
        let mut cfg = ExperimentConfig { method, samples: 2, ..Default::default() };
        if method == Method::Hybrid {
            cfg.params = ModelParams::asian_benchmark();
        }
        let r = cmd_price(&cfg).unwrap();
        assert!(r.price.is_finite() && r.std_error.is_finite(), "{method}: {r:?}");
        assert!(r.ci_low <= r.price && r.price <= r.ci_high);
    }
}

#[test]
fn seeded_runs_repeat_exactly() {
    let cfg = ExperimentConfig { samples: 3000, workers: 3, ..Default::default() };
    assert_eq!(cmd_price(&cfg).unwrap().price.to_bits(), cmd_price(&cfg).unwrap().price.to_bits());

    let render = || {
        let report = cmd_table(1, 0.01, 42, 4).unwrap();
        let mut buf = Vec::new();
        write_table_csv(&report, &mut buf).unwrap();
        buf
    };
    assert_eq!(render(), render());
}

#[test]
fn tables_report_misses_without_aborting() {
    let report = cmd_table(4, 0.01, 7, 2).unwrap();
    assert_eq!(report.rows.len(), 3);
    let text = report.to_string();
    assert!(text.contains("PASS") || text.contains("FAIL"));
    assert!(cmd_table(5, 0.1, 1, 1).is_err());
    assert!(cmd_table(1, 0.0, 1, 1).is_err());
}

#[test]
fn histogram_counts_and_csv() {
    let cfg = ExperimentConfig::default();
    let h = cmd_histogram(&cfg, 40).unwrap();
    assert_eq!(h.exact.iter().sum::<u64>(), 100_000);
    assert_eq!(h.lognormal.iter().sum::<u64>(), 100_000);
    let mut buf = Vec::new();
    write_histogram_csv(&h, &mut buf).unwrap();
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), ["bin_center", "exact", "lognormal"]);
    let rows: Vec<_> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 40);
    let total: u64 = rows.iter().map(|r| r[1].parse::<u64>().unwrap()).sum();
    assert_eq!(total, 100_000);

    let one = histogram(&[1.0, 5.0, 2.0], &[3.0], 1).unwrap();
    assert_eq!((one.exact[0], one.lognormal[0]), (3, 1));
}

#[test]
fn partial_merge_matches_single_pass() {
    let xs: Vec<f64> = (0..10_001).map(|i| ((i as f64) * 0.37).sin() * 1e3 + 5.0).collect();
    let mut single = Moments::default();
    xs.iter().for_each(|&x| single.push(x));
    let parts: Vec<Moments> = xs
        .chunks(777)
        .map(|c| {
            let mut m = Moments::default();
            c.iter().for_each(|&x| m.push(x));
            m
        })
        .collect();
    let merged = stats_reduce(&parts).unwrap();
    assert!((merged.price - single.mean()).abs() <= 1e-12 * single.mean().abs());
    assert!((merged.std_error - single.std_error()).abs() <= 1e-12 * single.std_error());

    let mut same = Moments::default();
    (0..10).for_each(|_| same.push(3.25));
    let r = RunResult::from_moments(&same);
    assert_eq!((r.price, r.std_error), (3.25, 0.0));
}

#[derive(Default)]
struct Covered(u64, u64);

impl Accumulator for Covered {
    fn merge(&mut self, other: Self) {
        self.0 += other.0;
        self.1 += other.1;
    }
}

#[test]
fn confidence_interval_coverage() {
    let reps = 1000;
    let c: Covered = run_parallel(reps, 91, 8, |rng, _, acc: &mut Covered| {
        let mut m = Moments::default();
        for _ in 0..1_000_000 {
            m.push(rng.normal());
        }
        acc.0 += RunResult::from_moments(&m).contains(0.0) as u64;
        acc.1 += 1;
        Ok(())
    })
    .unwrap();
    let rate = c.0 as f64 / c.1 as f64;
    assert!((rate - 0.95).abs() <= 0.02, "coverage {rate}");
}

fn row_strategy() -> impl Strategy<Value = ResultRow> {
    (
        "[a-z ,\"=^.0-9]{0,24}",
        -1e6f64..1e6,
        0.0f64..1e3,
        proptest::option::of(0.0f64..1.0),
        2u64..u64::MAX / 2,
        any::<u64>(),
    )
        .prop_map(|(label, price, se, acc, n, seed)| {
            let mut result = RunResult::from_estimate(price, se, n);
            result.acceptance_rate = acc;
            ResultRow { label, result, seed }
        })
}

proptest! {
    #[test]
    fn results_csv_round_trips(rows in proptest::collection::vec(row_strategy(), 0..8)) {
        let mut buf = Vec::new();
        write_results_csv(&rows, &mut buf).unwrap();
        let back = read_results_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, rows);
    }
}
