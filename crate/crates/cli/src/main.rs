use asian_retro::harness::{
    cmd_histogram, cmd_price, cmd_table, write_histogram_csv, write_results_csv, write_table_csv,
    ExperimentConfig, ResultRow,
};
use asian_retro::{Error, Result};
use clap::{Args, Parser, Subcommand};
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Retrospective Monte Carlo pricing of options on weighted and averaged
/// Black–Scholes prices.
#[derive(Parser)]
#[command(name = "asian-retro", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    samples: Option<u64>,
    /// trap-kv, exact, ue-bound, ue-free or hybrid.
    #[arg(long)]
    method: Option<String>,
    /// Write results to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Extra `key=value` overrides, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Price one configuration.
    Price(RunArgs),
    /// Reproduce a reference table.
    Table {
        /// Table number, 1 to 4.
        id: u8,
        /// Fraction of the reference sample counts.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Histogram of exact draws of the underlying against lognormal draws.
    Histogram {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 50)]
        bins: usize,
    },
}

fn load(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    for kv in &args.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::config("set", format!("expected KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(m) = &args.method {
        cfg.set("method", m)?;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(n) = args.samples {
        cfg.samples = n;
    }
    if let Some(p) = &args.csv {
        cfg.csv = Some(p.clone());
    }
    Ok(cfg)
}

fn create(path: &PathBuf) -> Result<File> {
    File::create(path).map_err(|e| Error::Config {
        line: None,
        field: Some("csv".into()),
        message: format!("cannot create {}: {e}", path.display()),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Price(args) => {
            let cfg = load(&args)?;
            let r = cmd_price(&cfg)?;
            let acc = r
                .acceptance_rate
                .map(|a| format!("  acceptance {:.2}%", 100.0 * a))
                .unwrap_or_default();
            println!(
                "{}: {:.5}  se {:.5}  95% ci [{:.5}, {:.5}]  n {}{}  ({:.2}s)",
                cfg.method, r.price, r.std_error, r.ci_low, r.ci_high, r.samples, acc, r.wall_seconds
            );
            if let Some(path) = &cfg.csv {
                let row = ResultRow {
                    label: cfg.method.to_string(),
                    result: r,
                    seed: cfg.seed,
                };
                write_results_csv(&[row], create(path)?)?;
            }
        }
        Command::Table {
            id,
            scale,
            seed,
            workers,
            csv,
        } => {
            let report = cmd_table(id, scale, seed, workers)?;
            print!("{report}");
            match csv {
                Some(path) => write_table_csv(&report, create(&path)?)?,
                None => {
                    let mut out = std::io::stdout().lock();
                    writeln!(out).ok();
                    write_table_csv(&report, out)?;
                }
            }
        }
        Command::Histogram { run, bins } => {
            let cfg = load(&run)?;
            let h = cmd_histogram(&cfg, bins)?;
            match &cfg.csv {
                Some(path) => write_histogram_csv(&h, create(path)?)?,
                None => write_histogram_csv(&h, std::io::stdout().lock())?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
