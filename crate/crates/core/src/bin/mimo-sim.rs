//! Monte Carlo driver for the iterative MIMO receiver.
//!
//! ```text
//! mimo-sim --snr 7,8,9 --ter 2e-3 --mode su_dapdc --w 1 --frames 100 --seed 42 --out report.csv
//! ```
//!
//! Exit codes: 0 on success, 2 on a configuration error, 1 on an I/O error.

use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use mimo_turbo::harness::{emit_report, report, run_experiment, RunConfig};
use mimo_turbo::Error;

#[derive(Debug, Parser)]
#[command(name = "mimo-sim", version, about = "BER and complexity campaigns for the iterative MIMO receiver")]
struct Cli {
    /// Flat `key = value` config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated SNR points in dB.
    #[arg(long)]
    snr: Option<String>,
    /// Comma-separated target error rates.
    #[arg(long)]
    ter: Option<String>,
    /// Comma-separated demapper modes: exact, su, su_pdc, su_spdc, su_dapdc, su_sdapdc.
    #[arg(long)]
    mode: Option<String>,
    /// Selective decoding window, or `full`.
    #[arg(long)]
    w: Option<String>,
    #[arg(long)]
    frames: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Report path; `-` writes the rows to stdout without a sidecar.
    #[arg(long)]
    out: Option<String>,
    /// Maximum number of detection/decoding iterations.
    #[arg(long)]
    iterations: Option<String>,
    /// Code block length in bits.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    mt: Option<String>,
    #[arg(long)]
    mr: Option<String>,
    #[arg(long)]
    constellation: Option<String>,
    /// `csv` or `jsonl`.
    #[arg(long)]
    format: Option<String>,
}

impl Cli {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        [
            ("snr", &self.snr),
            ("ter", &self.ter),
            ("mode", &self.mode),
            ("w", &self.w),
            ("frames", &self.frames),
            ("seed", &self.seed),
            ("out", &self.out),
            ("iterations", &self.iterations),
            ("k", &self.k),
            ("mt", &self.mt),
            ("mr", &self.mr),
            ("constellation", &self.constellation),
            ("format", &self.format),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }
}

fn run(cli: &Cli) -> mimo_turbo::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for (key, value) in cli.overrides() {
        cfg.set(key, value)?;
    }
    cfg.validate()?;
    for note in cfg.notes() {
        eprintln!("note: {note}");
    }

    let start = Instant::now();
    let rep = run_experiment(&cfg)?;
    eprintln!(
        "{} rows from {} frame runs in {:.1?}",
        rep.rows.len(),
        rep.frames.len(),
        start.elapsed()
    );
    if cfg.out.as_os_str() == "-" {
        let stdout = std::io::stdout().lock();
        match cfg.format {
            mimo_turbo::harness::ReportFormat::Csv => report::write_csv(&rep.rows, stdout),
            mimo_turbo::harness::ReportFormat::JsonLines => report::write_json_lines(&rep.rows, stdout),
        }
    } else {
        emit_report(&rep, cfg.format, &cfg.out)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
