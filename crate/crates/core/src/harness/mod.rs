//! Monte Carlo campaigns over (SNR, TER, mode) grids.

pub mod config;
pub mod report;

pub use config::{ReportFormat, RunConfig, Window};
pub use report::{aggregate, emit_report, FrameRecord, Report, ReportRow};

use crate::channel::snr_to_noise_var;
use crate::iterative::{run_frame, Link, ReceiverConfig};
use crate::Result;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Simulates every frame of one SNR point for all (ter, mode) pairs.
fn simulate_frame(link: &Link, cfg: &RunConfig, snr_db: f64, frame: u64) -> Result<Vec<FrameRecord>> {
    let noise_var = snr_to_noise_var(snr_db, cfg.m_t);
    let tx = link.transmit_frame(cfg.seed, frame, noise_var)?;
    let mut out = Vec::with_capacity(cfg.ter.len() * cfg.modes.len());
    for &ter in &cfg.ter {
        for &mode in &cfg.modes {
            let rx = ReceiverConfig {
                mode,
                ter,
                window: cfg.window.as_option(),
                max_iterations: cfg.max_iterations,
            };
            let outcome = run_frame(link, &tx, &rx)?;
            out.push(FrameRecord {
                snr_db,
                ter,
                mode,
                frame,
                stats: outcome.stats,
            });
        }
    }
    Ok(out)
}

fn simulate_point(link: &Link, cfg: &RunConfig, snr_db: f64) -> Result<Vec<Vec<FrameRecord>>> {
    #[cfg(feature = "parallel")]
    let frames = (0..cfg.frames).into_par_iter();
    #[cfg(not(feature = "parallel"))]
    let frames = 0..cfg.frames;
    frames.map(|f| simulate_frame(link, cfg, snr_db, f)).collect()
}

/// Runs the campaign. The result depends only on the configuration: frame
/// `f` at every grid point draws its data, channel and noise from substreams
/// of `(seed, f)`, and aggregation follows the configured grid order.
pub fn run_experiment(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let link = Link::new(cfg.m_t, cfg.m_r, cfg.constellation()?, cfg.block_len, cfg.seed)?;
    let mut frames = Vec::new();
    let mut rows = Vec::new();
    for &snr_db in &cfg.snr_db {
        let per_frame = simulate_point(&link, cfg, snr_db)?;
        let records: Vec<FrameRecord> = per_frame.into_iter().flatten().collect();
        for &ter in &cfg.ter {
            for &mode in &cfg.modes {
                let cell: Vec<&FrameRecord> = records
                    .iter()
                    .filter(|r| r.ter == ter && r.mode == mode)
                    .collect();
                rows.extend(aggregate(snr_db, ter, mode, &cell));
            }
        }
        frames.extend(records);
    }
    Ok(Report {
        version: VERSION.to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        notes: cfg.notes(),
        rows,
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::ClipMode;

    fn tiny() -> RunConfig {
        RunConfig {
            block_len: 512,
            snr_db: vec![8.0],
            modes: vec![ClipMode::Exact],
            window: Window::Full,
            frames: 1,
            max_iterations: 3,
            ..RunConfig::default()
        }
    }

    #[test]
    fn smoke_has_at_most_q_rows() {
        let report = run_experiment(&tiny()).unwrap();
        assert!(!report.rows.is_empty() && report.rows.len() <= 3);
        assert_eq!(report.frames.len(), 1);
        assert!(report.notes.is_empty());
    }

    #[test]
    fn invalid_config_is_an_error() {
        assert!(run_experiment(&RunConfig { frames: 0, ..tiny() }).is_err());
    }
}
