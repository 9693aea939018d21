//! Run configuration: a flat `key = value` file overlaid by CLI flags.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::iterative::ter_threshold;
use crate::modem::{Constellation, FrameLayout};
use crate::sphere::ClipMode;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    JsonLines,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" | "jsonl" | "json-lines" | "json_lines" => Ok(Self::JsonLines),
            other => Err(Error::InvalidConfig(format!("unknown report format '{other}'"))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::JsonLines => "jsonl",
        })
    }
}

/// Channel decoding schedule: every stage, or windows around non-RWC bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Full,
    Selective(usize),
}

impl Window {
    pub fn as_option(self) -> Option<usize> {
        match self {
            Self::Full => None,
            Self::Selective(w) => Some(w),
        }
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("full") || s.eq_ignore_ascii_case("none") {
            return Ok(Self::Full);
        }
        match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(Error::InvalidWindow),
            Ok(w) => Ok(Self::Selective(w)),
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Full => f.write_str("full"),
            Self::Selective(w) => write!(f, "{w}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub m_t: usize,
    pub m_r: usize,
    pub constellation: String,
    pub block_len: usize,
    pub snr_db: Vec<f64>,
    pub ter: Vec<f64>,
    pub modes: Vec<ClipMode>,
    pub window: Window,
    pub max_iterations: usize,
    pub frames: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub format: ReportFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            m_t: 4,
            m_r: 4,
            constellation: "16qam".into(),
            block_len: 18432,
            snr_db: vec![7.0],
            ter: vec![2e-3],
            modes: vec![ClipMode::SuDapdc],
            window: Window::Selective(1),
            max_iterations: 5,
            frames: 100,
            seed: 42,
            out: PathBuf::from("report.csv"),
            format: ReportFormat::Csv,
        }
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| Error::InvalidConfig(format!("bad value '{s}' for '{key}'")))
        })
        .collect()
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::InvalidConfig(format!("bad value '{value}' for '{key}'")))
}

impl RunConfig {
    /// Applies one `key = value` setting. Keys mirror the long CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim().replace('-', "_").as_str() {
            "mt" | "m_t" => self.m_t = parse_one(key, value)?,
            "mr" | "m_r" => self.m_r = parse_one(key, value)?,
            "constellation" => self.constellation = value.trim().to_string(),
            "k" | "block_len" => self.block_len = parse_one(key, value)?,
            "snr" | "snr_db" => self.snr_db = parse_list(key, value)?,
            "ter" => self.ter = parse_list(key, value)?,
            "mode" | "modes" => self.modes = parse_list(key, value)?,
            "w" | "window" => self.window = value.parse()?,
            "iterations" | "max_iterations" => self.max_iterations = parse_one(key, value)?,
            "frames" => self.frames = parse_one(key, value)?,
            "seed" => self.seed = parse_one(key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            "format" => self.format = value.parse()?,
            other => return Err(Error::InvalidConfig(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses a flat config: one `key = value` per line, `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn constellation(&self) -> Result<Constellation> {
        self.constellation.parse()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.constellation()?;
        if self.m_t == 0 || self.m_r < self.m_t {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= m_t <= m_r, got m_t = {}, m_r = {}",
                self.m_t, self.m_r
            )));
        }
        FrameLayout::new(self.block_len, self.m_t, c.bits_per_symbol())?;
        if self.frames == 0 {
            return Err(Error::InvalidConfig("frames must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        for &t in &self.ter {
            ter_threshold(t)?;
        }
        if let Some(s) = self.snr_db.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig(format!("snr {s} is not finite")));
        }
        Ok(())
    }

    /// Warnings about legal but unusual combinations.
    pub fn notes(&self) -> Vec<String> {
        let mut notes = Vec::new();
        if let Window::Selective(w) = self.window {
            if self.modes.contains(&ClipMode::Exact) {
                notes.push(format!(
                    "mode exact runs with selective decoding (w = {w}); its decoder still skips RWC stages"
                ));
            }
        }
        notes
    }
}
