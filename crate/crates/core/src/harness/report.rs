//! Campaign reports and their CSV / JSON-lines serialization.

use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::config::{ReportFormat, RunConfig};
use crate::iterative::IterationStats;
use crate::sphere::ClipMode;
use crate::Result;

pub const CSV_HEADER: [&str; 10] = [
    "snr_db",
    "ter",
    "mode",
    "iteration",
    "ber_true",
    "ber_est",
    "visited_nodes_cum",
    "beta_stores_cum",
    "non_rwc",
    "frames",
];

/// Means over the frames of one (snr, ter, mode) cell at one iteration.
/// Iterations are counted from 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub snr_db: f64,
    pub ter: f64,
    pub mode: ClipMode,
    pub iteration: usize,
    pub ber_true: f64,
    pub ber_est: f64,
    pub visited_nodes_cum: f64,
    pub beta_stores_cum: f64,
    pub non_rwc: f64,
    pub frames: u64,
}

/// Per-iteration statistics of one simulated frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub snr_db: f64,
    pub ter: f64,
    pub mode: ClipMode,
    pub frame: u64,
    pub stats: Vec<IterationStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub notes: Vec<String>,
    pub rows: Vec<ReportRow>,
    #[serde(skip)]
    pub frames: Vec<FrameRecord>,
}

#[derive(Serialize)]
struct Meta<'a> {
    version: &'a str,
    seed: u64,
    config: &'a RunConfig,
    notes: &'a [String],
    rows: usize,
}

impl Report {
    pub fn rows_for(&self, snr_db: f64, ter: f64, mode: ClipMode) -> Vec<ReportRow> {
        self.rows
            .iter()
            .filter(|r| r.snr_db == snr_db && r.ter == ter && r.mode == mode)
            .copied()
            .collect()
    }

    pub fn frames_for(&self, snr_db: f64, ter: f64, mode: ClipMode) -> Vec<&FrameRecord> {
        self.frames
            .iter()
            .filter(|f| f.snr_db == snr_db && f.ter == ter && f.mode == mode)
            .collect()
    }

    /// Row for the last iteration of a cell.
    pub fn final_row(&self, snr_db: f64, ter: f64, mode: ClipMode) -> Option<ReportRow> {
        self.rows_for(snr_db, ter, mode).last().copied()
    }
}

/// Aggregates one cell. A frame that stopped early contributes its last
/// iteration's values to every later row.
pub fn aggregate(snr_db: f64, ter: f64, mode: ClipMode, frames: &[&FrameRecord]) -> Vec<ReportRow> {
    let depth = frames.iter().map(|f| f.stats.len()).max().unwrap_or(0);
    let n = frames.len() as f64;
    (0..depth)
        .map(|q| {
            let mut row = ReportRow {
                snr_db,
                ter,
                mode,
                iteration: q + 1,
                ber_true: 0.0,
                ber_est: 0.0,
                visited_nodes_cum: 0.0,
                beta_stores_cum: 0.0,
                non_rwc: 0.0,
                frames: frames.len() as u64,
            };
            for f in frames {
                let s = &f.stats[q.min(f.stats.len() - 1)];
                row.ber_true += s.ber_true;
                row.ber_est += s.ber_estimate;
                row.visited_nodes_cum += s.visited_nodes as f64;
                row.beta_stores_cum += s.beta_stores as f64;
                row.non_rwc += s.non_rwc_count as f64;
            }
            row.ber_true /= n;
            row.ber_est /= n;
            row.visited_nodes_cum /= n;
            row.beta_stores_cum /= n;
            row.non_rwc /= n;
            row
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json_lines<W: Write>(rows: &[ReportRow], mut out: W) -> Result<()> {
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

pub fn read_json_lines(text: &str) -> Result<Vec<ReportRow>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

fn csv_error(e: csv::Error) -> crate::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io.into(),
        other => crate::Error::InvalidConfig(format!("csv: {other:?}")),
    }
}

/// Path of the metadata sidecar written next to a report.
pub fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes the rows to `path` in `format`, plus a JSON metadata sidecar.
pub fn emit_report(report: &Report, format: ReportFormat, path: &Path) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    match format {
        ReportFormat::Csv => write_csv(&report.rows, file)?,
        ReportFormat::JsonLines => write_json_lines(&report.rows, file)?,
    }
    let meta = Meta {
        version: &report.version,
        seed: report.seed,
        config: &report.config,
        notes: &report.notes,
        rows: report.rows.len(),
    };
    let mut side = BufWriter::new(File::create(meta_path(path))?);
    serde_json::to_writer_pretty(&mut side, &meta)?;
    side.write_all(b"\n")?;
    side.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(q: usize, ber: f64, visited: u64) -> IterationStats {
        IterationStats {
            iteration: q,
            ber_estimate: ber / 2.0,
            ber_true: ber,
            visited_nodes: visited,
            beta_stores: 10 * (q as u64 + 1),
            non_rwc_count: 100 - q,
            stopped: false,
        }
    }

    fn record(frame: u64, stats: Vec<IterationStats>) -> FrameRecord {
        FrameRecord { snr_db: 7.0, ter: 2e-3, mode: ClipMode::SuOnly, frame, stats }
    }

    #[test]
    fn empty_campaign_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "snr_db,ter,mode,iteration,ber_true,ber_est,visited_nodes_cum,beta_stores_cum,non_rwc,frames\n"
        );
    }

    #[test]
    fn stopped_frames_carry_forward() {
        let a = record(0, vec![stats(0, 0.1, 100)]);
        let b = record(1, vec![stats(0, 0.3, 200), stats(1, 0.1, 260)]);
        let rows = aggregate(7.0, 2e-3, ClipMode::SuOnly, &[&a, &b]);
        assert_eq!(rows.len(), 2);
        assert!((rows[0].ber_true - 0.2).abs() < 1e-15);
        assert!((rows[1].ber_true - 0.1).abs() < 1e-15);
        assert_eq!(rows[1].visited_nodes_cum, 180.0);
        assert_eq!(rows[1].beta_stores_cum, 15.0);
        assert_eq!(rows[1].iteration, 2);
        assert_eq!(rows[1].frames, 2);
    }

    #[test]
    fn two_iterations_give_two_rows_in_both_formats() {
        let a = record(0, vec![stats(0, 0.123456789012345, 1), stats(1, 1e-17, 3)]);
        let rows = aggregate(7.25, 2e-3, ClipMode::SuOnly, &[&a]);
        let (mut csv_buf, mut json_buf) = (Vec::new(), Vec::new());
        write_csv(&rows, &mut csv_buf).unwrap();
        write_json_lines(&rows, &mut json_buf).unwrap();
        let csv_text = String::from_utf8(csv_buf).unwrap();
        assert_eq!(csv_text.lines().count(), 3);
        assert!(csv_text.lines().nth(1).unwrap().starts_with("7.25,0.002,su,1,0.123456789012345,"));
        let from_csv = read_csv(&csv_text).unwrap();
        let from_json = read_json_lines(std::str::from_utf8(&json_buf).unwrap()).unwrap();
        assert_eq!(from_csv, rows);
        assert_eq!(from_json, rows);
    }

    #[test]
    fn sidecar_sits_next_to_report() {
        assert_eq!(meta_path(Path::new("out/r.csv")), PathBuf::from("out/r.csv.meta.json"));
    }
}
