use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use mimo_ba::complexity::{complexity_for_config, write_complexity_csv};
use mimo_ba::config::ExperimentConfig;
use mimo_ba::experiment::run_experiment;
use mimo_ba::quantization::QuantMode;
use mimo_ba::report::write_csv;
use mimo_ba::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

/// Bit allocation sweeps for variable-resolution ADC receivers.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// Experiment file of `key = value` lines; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo trials per row; enables the empirical δ column.
    #[arg(long)]
    trials: Option<usize>,
    /// Print only the operation-count table.
    #[arg(long)]
    complexity_only: bool,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::reference(8),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.channel.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
        cfg.empirical = true;
    }
    cfg.validate().map_err(|e| match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    })?;
    Ok(cfg)
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("MIMO_BA_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("MIMO_BA_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn output(cli: &Cli) -> io::Result<Box<dyn Write>> {
    Ok(match &cli.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: &Cli) -> Result<u8, Error> {
    configure_threads()?;
    let cfg = load_config(cli)?;
    if cfg.table.mode == QuantMode::Approximation {
        eprintln!("warning: using the closed-form distortion approximation instead of the table");
    }
    if cli.complexity_only {
        let reports = complexity_for_config(&cfg)?;
        write_complexity_csv(&reports, cfg.n_s, cfg.n_b, output(cli)?)?;
        return Ok(0);
    }
    let result = run_experiment(&cfg)?;
    for note in &result.notes {
        eprintln!("{} at {} dB: {}", note.scheme, note.snr_db, note.message);
    }
    write_csv(&result.rows, output(cli)?)?;
    Ok(if result.all_infeasible() { EXIT_INFEASIBLE } else { 0 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => EXIT_CONFIG,
                _ => EXIT_FAILURE,
            })
        }
    }
}
