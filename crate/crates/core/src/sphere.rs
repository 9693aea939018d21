//! Soft-input/soft-output sphere decoding with a single tree search.
//!
//! The max-log LLR of every bit is the difference of two constrained minima of
//! the metric `I(s) = ‖y′ − R s‖² / (2σₙ²) + I_prior(s)`. One depth-first
//! Schnorr–Euchner traversal keeps a radius `r²` per bit and per hypothesis
//! (`+1` / `−1`) and prunes a node only when its partial distance exceeds every
//! radius the node could still improve.
//!
//! On top of the exact search the decoder supports:
//!
//! - selective update (SU): radii of RWC-flagged bits are zeroed so their
//!   searches never hold a subtree open, and their outputs are copied from the
//!   previous iteration;
//! - performance-driven clipping: every radius is additionally capped by a
//!   mode-specific hypersphere around the best metric found so far, and each
//!   new best metric pulls the counter-hypothesis radii down to a fallback
//!   bound so a clipped LLR is produced even when no leaf lies inside it.

use num_complex::Complex64;
use std::fmt;
use std::str::FromStr;

use crate::channel::ChannelUse;
use crate::modem::Constellation;
use crate::numerics::ComplexMatrix;
use crate::{Error, Result};

/// Floor applied to 2σₙ² so a noiseless channel still yields finite metrics.
pub const MIN_NOISE_VAR: f64 = 1e-9;

/// Search policy of the demapper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipMode {
    /// Exact max-log search, no flags consulted.
    Exact,
    /// Selective update only.
    #[serde(rename = "su", alias = "su_only")]
    SuOnly,
    SuPdc,
    SuSpdc,
    SuDapdc,
    SuSdapdc,
}

impl ClipMode {
    pub const ALL: [ClipMode; 6] = [
        ClipMode::Exact,
        ClipMode::SuOnly,
        ClipMode::SuPdc,
        ClipMode::SuSpdc,
        ClipMode::SuDapdc,
        ClipMode::SuSdapdc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClipMode::Exact => "exact",
            ClipMode::SuOnly => "su",
            ClipMode::SuPdc => "su_pdc",
            ClipMode::SuSpdc => "su_spdc",
            ClipMode::SuDapdc => "su_dapdc",
            ClipMode::SuSdapdc => "su_sdapdc",
        }
    }

    /// Whether RWC flags are honoured.
    pub fn selective_update(self) -> bool {
        self != ClipMode::Exact
    }

    pub fn clips(self) -> bool {
        !matches!(self, ClipMode::Exact | ClipMode::SuOnly)
    }

    /// Radius used for the counter-hypothesis update on every new best leaf.
    fn fallback(self) -> Option<ClipMode> {
        match self {
            ClipMode::Exact | ClipMode::SuOnly => None,
            ClipMode::SuPdc | ClipMode::SuDapdc => Some(ClipMode::SuPdc),
            ClipMode::SuSpdc | ClipMode::SuSdapdc => Some(ClipMode::SuSpdc),
        }
    }
}

impl fmt::Display for ClipMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClipMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s
            .trim()
            .to_ascii_lowercase()
            .split(['-', '&', ' ', '_'])
            .filter(|p| !p.is_empty())
            .collect::<Vec<_>>()
            .join("_");
        Ok(match norm.as_str() {
            "exact" | "typical" => ClipMode::Exact,
            "su" | "su_only" => ClipMode::SuOnly,
            "su_pdc" => ClipMode::SuPdc,
            "su_spdc" => ClipMode::SuSpdc,
            "su_dapdc" | "su_da_pdc" => ClipMode::SuDapdc,
            "su_sdapdc" | "su_sda_pdc" => ClipMode::SuSdapdc,
            _ => return Err(Error::UnknownMode(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdConfig {
    pub mode: ClipMode,
    /// LLR threshold L̃_TER; ignored by `Exact` and `SuOnly`.
    pub l_ter: f64,
    /// 2σₙ².
    pub noise_var: f64,
}

impl SdConfig {
    pub fn exact(noise_var: f64) -> Self {
        Self {
            mode: ClipMode::Exact,
            l_ter: f64::INFINITY,
            noise_var,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdResult {
    pub app_llrs: Vec<f64>,
    pub ext_llrs: Vec<f64>,
    pub visited_nodes: u64,
    pub skipped_bits: usize,
}

#[inline]
fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `Σ ½(|L_A| − c·L_A)` over one symbol block, optionally leaving one bit out.
pub fn prior_metric_block(bits: &[f64], l_a: &[f64], exclude_bit: Option<usize>) -> f64 {
    bits.iter()
        .zip(l_a)
        .enumerate()
        .filter(|(j, _)| Some(*j) != exclude_bit)
        .map(|(_, (&c, &l))| 0.5 * (l.abs() - c * l))
        .sum()
}

/// Partial distance of the node fixing antennas `level..M_T` (zero-based) to
/// `labels` (indexed by antenna; entries below `level` are ignored).
#[allow(clippy::too_many_arguments)]
pub fn partial_distance(
    parent_pd: f64,
    level: usize,
    labels: &[usize],
    y_rot: &[Complex64],
    r: &ComplexMatrix,
    l_a: &[f64],
    noise_var: f64,
    constellation: &Constellation,
) -> f64 {
    let m = constellation.bits_per_symbol();
    let n = r.cols();
    let interference: Complex64 = (level..n)
        .map(|j| r[(level, j)] * constellation.point(labels[j]))
        .sum();
    let channel = (y_rot[level] - interference).norm_sqr() / noise_var;
    let bits: Vec<f64> = (0..m).map(|b| constellation.bit(labels[level], b)).collect();
    let prior = prior_metric_block(&bits, &l_a[level * m..(level + 1) * m], None);
    parent_pd + channel + prior
}

/// Hypersphere radius of clipping policy `mode` for one bit.
///
/// `c_map` is the bit of the best leaf found so far and `lambda_map` its
/// metric; until a leaf exists the radius is unbounded.
pub fn clip_radius(mode: ClipMode, l_a: f64, c_map: f64, lambda_map: f64, l_ter: f64) -> f64 {
    if !lambda_map.is_finite() {
        return f64::INFINITY;
    }
    let s = sign(l_a);
    match mode {
        ClipMode::Exact | ClipMode::SuOnly => f64::INFINITY,
        ClipMode::SuPdc => lambda_map + l_a.abs() + l_ter + 0.5 * (c_map - s) * l_a,
        ClipMode::SuSpdc => lambda_map + l_a.abs() + l_ter + (c_map - s) * l_a,
        ClipMode::SuDapdc => {
            lambda_map + l_ter + 0.5 * (c_map - s) * (c_map * l_a.abs() + l_a)
        }
        ClipMode::SuSdapdc => lambda_map + l_ter,
    }
}

/// Per-bit radii of one single-tree search.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusSet {
    /// Best metric among leaves whose bit `k` is `+1`.
    pub plus: Vec<f64>,
    /// Best metric among leaves whose bit `k` is `−1`.
    pub minus: Vec<f64>,
    /// Best metric found so far (λ̂^MAP).
    pub lambda_map: f64,
    /// Bits of the best leaf (0 before any leaf).
    pub c_map: Vec<f64>,
}

impl RadiusSet {
    pub fn new(n_bits: usize) -> Self {
        Self {
            plus: vec![f64::INFINITY; n_bits],
            minus: vec![f64::INFINITY; n_bits],
            lambda_map: f64::INFINITY,
            c_map: vec![0.0; n_bits],
        }
    }

    pub fn radius(&self, k: usize, bit: f64) -> f64 {
        if bit > 0.0 {
            self.plus[k]
        } else {
            self.minus[k]
        }
    }

    fn radius_mut(&mut self, k: usize, bit: f64) -> &mut f64 {
        if bit > 0.0 {
            &mut self.plus[k]
        } else {
            &mut self.minus[k]
        }
    }

    /// Zeroes both radii of a bit whose search is skipped.
    pub fn skip(&mut self, k: usize) {
        self.plus[k] = 0.0;
        self.minus[k] = 0.0;
    }

    /// `min(r², clip)` for the search of bit `k` with hypothesis `bit`.
    pub fn effective(&self, k: usize, bit: f64, mode: ClipMode, l_a: f64, l_ter: f64) -> f64 {
        let clip = clip_radius(mode, l_a, self.c_map[k], self.lambda_map, l_ter);
        self.radius(k, bit).min(clip)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneDecision {
    Keep,
    Prune,
}

/// Constraint check of a node whose bits are `fixed[k] = Some(±1)` for the
/// antennas already decided and `None` below.
///
/// The node can still improve the search of a decided bit only on its own
/// hypothesis side, and both searches of every undecided bit.
pub fn prune_check(
    pd: f64,
    fixed: &[Option<f64>],
    radii: &RadiusSet,
    mode: ClipMode,
    l_a: &[f64],
    l_ter: f64,
) -> PruneDecision {
    let bound = fixed
        .iter()
        .enumerate()
        .flat_map(|(k, bit)| match bit {
            Some(b) => vec![radii.effective(k, *b, mode, l_a[k], l_ter)],
            None => vec![
                radii.effective(k, 1.0, mode, l_a[k], l_ter),
                radii.effective(k, -1.0, mode, l_a[k], l_ter),
            ],
        })
        .fold(f64::NEG_INFINITY, f64::max);
    if pd > bound {
        PruneDecision::Prune
    } else {
        PruneDecision::Keep
    }
}

struct Search<'a> {
    m_t: usize,
    m: usize,
    points: &'a [Complex64],
    constellation: &'a Constellation,
    r: &'a ComplexMatrix,
    y_rot: &'a [Complex64],
    inv_nv: f64,
    l_a: &'a [f64],
    flagged: &'a [bool],
    mode: ClipMode,
    l_ter: f64,
    /// `prior[antenna * |S| + label]`.
    prior: Vec<f64>,
    radii: RadiusSet,
    eff_plus: Vec<f64>,
    eff_minus: Vec<f64>,
    /// `undecided[i]` = largest effective radius over antennas `< i`.
    undecided: Vec<f64>,
    visited: u64,
}

impl<'a> Search<'a> {
    fn refresh(&mut self) {
        for k in 0..self.m_t * self.m {
            let clip = clip_radius(
                self.mode,
                self.l_a[k],
                self.radii.c_map[k],
                self.radii.lambda_map,
                self.l_ter,
            );
            self.eff_plus[k] = self.radii.plus[k].min(clip);
            self.eff_minus[k] = self.radii.minus[k].min(clip);
        }
        self.undecided[0] = f64::NEG_INFINITY;
        for i in 0..self.m_t {
            let mut acc = self.undecided[i];
            for k in i * self.m..(i + 1) * self.m {
                acc = acc.max(self.eff_plus[k]).max(self.eff_minus[k]);
            }
            self.undecided[i + 1] = acc;
        }
    }

    /// Largest effective radius among the searches a fixed symbol can reach.
    #[inline]
    fn symbol_bound(&self, antenna: usize, label: usize) -> f64 {
        let mut acc = f64::NEG_INFINITY;
        for b in 0..self.m {
            let k = antenna * self.m + b;
            let r = if self.constellation.bit(label, b) > 0.0 {
                self.eff_plus[k]
            } else {
                self.eff_minus[k]
            };
            acc = acc.max(r);
        }
        acc
    }

    fn on_leaf(&mut self, metric: f64, labels: &[usize]) {
        let n_bits = self.m_t * self.m;
        let mut bits = vec![0.0; n_bits];
        for (i, &label) in labels.iter().enumerate() {
            for b in 0..self.m {
                bits[i * self.m + b] = self.constellation.bit(label, b);
            }
        }
        for k in 0..n_bits {
            if self.flagged[k] {
                continue;
            }
            let r = self.radii.radius_mut(k, bits[k]);
            *r = r.min(metric);
        }
        if metric < self.radii.lambda_map {
            self.radii.lambda_map = metric;
            self.radii.c_map.copy_from_slice(&bits);
            if let Some(fallback) = self.mode.fallback() {
                for k in 0..n_bits {
                    if self.flagged[k] {
                        continue;
                    }
                    let bound = clip_radius(fallback, self.l_a[k], bits[k], metric, self.l_ter);
                    let counter = self.radii.radius_mut(k, -bits[k]);
                    *counter = counter.min(bound);
                }
            }
        }
        self.refresh();
    }

    /// Children of the node fixing antennas above `antenna`, sorted by
    /// ascending metric increment (stable: ties keep label order).
    fn expand(&self, antenna: usize, labels: &[usize], order: &mut [usize], inc: &mut [f64]) {
        let mut b = self.y_rot[antenna];
        for j in antenna + 1..self.m_t {
            b -= self.r[(antenna, j)] * self.points[labels[j]];
        }
        let rii = self.r[(antenna, antenna)];
        let size = self.points.len();
        for label in 0..size {
            inc[label] = (b - rii * self.points[label]).norm_sqr() * self.inv_nv
                + self.prior[antenna * size + label];
            order[label] = label;
        }
        order[..size].sort_by(|&x, &y| inc[x].total_cmp(&inc[y]));
    }

    fn run(&mut self) {
        let m_t = self.m_t;
        let size = self.points.len();
        let mut labels = vec![0usize; m_t];
        let mut order = vec![0usize; m_t * size];
        let mut inc = vec![0.0; m_t * size];
        let mut next = vec![0usize; m_t];
        // parent_pd[i]: PD of the node above antenna level i.
        let mut parent_pd = vec![0.0; m_t];
        // fixed[i]: max over symbol bounds of antennas i..m_t on the current path.
        let mut fixed = vec![f64::NEG_INFINITY; m_t + 1];

        self.refresh();
        let top = m_t - 1;
        self.expand(
            top,
            &labels,
            &mut order[top * size..(top + 1) * size],
            &mut inc[top * size..(top + 1) * size],
        );
        next[top] = 0;
        let mut level = top;
        loop {
            if next[level] == size {
                if level == top {
                    break;
                }
                level += 1;
                continue;
            }
            let label = order[level * size + next[level]];
            next[level] += 1;
            self.visited += 1;
            let pd = parent_pd[level] + inc[level * size + label];

            let sibling_bound = self.undecided[level + 1].max(fixed[level + 1]);
            if pd > sibling_bound {
                next[level] = size;
                continue;
            }
            let own = self.undecided[level]
                .max(fixed[level + 1])
                .max(self.symbol_bound(level, label));
            if pd > own {
                continue;
            }
            labels[level] = label;
            if level == 0 {
                self.on_leaf(pd, &labels);
                for i in (1..m_t).rev() {
                    fixed[i] = fixed[i + 1].max(self.symbol_bound(i, labels[i]));
                }
                continue;
            }
            fixed[level] = fixed[level + 1].max(self.symbol_bound(level, label));
            let child = level - 1;
            parent_pd[child] = pd;
            self.expand(
                child,
                &labels,
                &mut order[child * size..(child + 1) * size],
                &mut inc[child * size..(child + 1) * size],
            );
            next[child] = 0;
            level = child;
        }
    }
}

/// Previous-iteration outputs consulted for skipped bits.
#[derive(Debug, Clone, Copy)]
pub struct PreviousLlrs<'a> {
    pub app: &'a [f64],
    pub ext: &'a [f64],
}

/// Soft demapping of one channel use.
///
/// `rwc_flags` marks bits whose outputs are copied from `prev`; they are
/// ignored in `Exact` mode. The returned radii are exposed for auditing via
/// [`soft_demap_with_radii`].
pub fn soft_demap(
    channel_use: &ChannelUse,
    constellation: &Constellation,
    l_a: &[f64],
    rwc_flags: &[bool],
    cfg: &SdConfig,
    prev: Option<PreviousLlrs<'_>>,
) -> Result<SdResult> {
    soft_demap_with_radii(channel_use, constellation, l_a, rwc_flags, cfg, prev).map(|(r, _)| r)
}

/// [`soft_demap`] that also returns the final radius set.
pub fn soft_demap_with_radii(
    channel_use: &ChannelUse,
    constellation: &Constellation,
    l_a: &[f64],
    rwc_flags: &[bool],
    cfg: &SdConfig,
    prev: Option<PreviousLlrs<'_>>,
) -> Result<(SdResult, RadiusSet)> {
    let m_t = channel_use.num_tx();
    let m = constellation.bits_per_symbol();
    let n_bits = m_t * m;
    for len in [l_a.len(), rwc_flags.len()] {
        if len != n_bits {
            return Err(Error::DimensionMismatch {
                expected: n_bits,
                actual: len,
            });
        }
    }
    if channel_use.y_rot.len() != m_t || channel_use.r.rows() != m_t {
        return Err(Error::DimensionMismatch {
            expected: m_t,
            actual: channel_use.y_rot.len(),
        });
    }

    let no_flags = vec![false; n_bits];
    let flagged: &[bool] = if cfg.mode.selective_update() {
        rwc_flags
    } else {
        &no_flags
    };
    let skipped_bits = flagged.iter().filter(|&&f| f).count();
    if skipped_bits > 0 {
        match prev {
            Some(p) if p.app.len() == n_bits && p.ext.len() == n_bits => {}
            Some(p) => {
                return Err(Error::DimensionMismatch {
                    expected: n_bits,
                    actual: p.app.len().min(p.ext.len()),
                })
            }
            None => {
                return Err(Error::InvalidConfig(
                    "flagged bits need previous-iteration LLRs".into(),
                ))
            }
        }
    }

    let size = constellation.size();
    let mut prior = vec![0.0; m_t * size];
    for i in 0..m_t {
        for label in 0..size {
            prior[i * size + label] = (0..m)
                .map(|b| {
                    let l = l_a[i * m + b];
                    0.5 * (l.abs() - constellation.bit(label, b) * l)
                })
                .sum();
        }
    }

    let mut radii = RadiusSet::new(n_bits);
    for (k, &f) in flagged.iter().enumerate() {
        if f {
            radii.skip(k);
        }
    }

    let mut search = Search {
        m_t,
        m,
        points: constellation.points(),
        constellation,
        r: &channel_use.r,
        y_rot: &channel_use.y_rot,
        inv_nv: 1.0 / channel_use.noise_var.max(MIN_NOISE_VAR),
        l_a,
        flagged,
        mode: cfg.mode,
        l_ter: cfg.l_ter,
        prior,
        radii,
        eff_plus: vec![0.0; n_bits],
        eff_minus: vec![0.0; n_bits],
        undecided: vec![f64::NEG_INFINITY; m_t + 1],
        visited: 0,
    };
    if skipped_bits < n_bits {
        search.run();
    }

    let mut app = vec![0.0; n_bits];
    let mut ext = vec![0.0; n_bits];
    for k in 0..n_bits {
        if flagged[k] {
            let p = prev.expect("checked above");
            app[k] = p.app[k];
            ext[k] = p.ext[k];
        } else {
            app[k] = search.radii.minus[k] - search.radii.plus[k];
            ext[k] = app[k] - l_a[k];
        }
    }
    debug_assert!(app.iter().all(|l| l.is_finite()));

    Ok((
        SdResult {
            app_llrs: app,
            ext_llrs: ext,
            visited_nodes: search.visited,
            skipped_bits,
        },
        search.radii,
    ))
}

/// Largest symbol-vector count [`brute_force_maxlog`] will enumerate.
pub const BRUTE_FORCE_GUARD: u64 = 1 << 20;

/// Max-log LLRs by enumerating every symbol vector against `y` and `H`
/// directly (no QR, no tree, no pruning).
pub fn brute_force_maxlog(
    channel_use: &ChannelUse,
    constellation: &Constellation,
    l_a: &[f64],
) -> Result<Vec<f64>> {
    let m_t = channel_use.h.cols();
    let m_r = channel_use.h.rows();
    let m = constellation.bits_per_symbol();
    let size = constellation.size();
    let total = (size as u64).checked_pow(m_t as u32).unwrap_or(u64::MAX);
    if total > BRUTE_FORCE_GUARD {
        return Err(Error::GuardExceeded(total));
    }
    let n_bits = m_t * m;
    if l_a.len() != n_bits {
        return Err(Error::DimensionMismatch {
            expected: n_bits,
            actual: l_a.len(),
        });
    }
    // columns[j][label] = h_j · point(label)
    let columns: Vec<Vec<Vec<Complex64>>> = (0..m_t)
        .map(|j| {
            (0..size)
                .map(|label| {
                    (0..m_r)
                        .map(|i| channel_use.h[(i, j)] * constellation.point(label))
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut best_plus = vec![f64::INFINITY; n_bits];
    let mut best_minus = vec![f64::INFINITY; n_bits];
    let mut labels = vec![0usize; m_t];
    let mut residual = vec![Complex64::new(0.0, 0.0); m_r];
    for index in 0..total {
        let mut rest = index;
        for label in labels.iter_mut() {
            *label = (rest % size as u64) as usize;
            rest /= size as u64;
        }
        residual.copy_from_slice(&channel_use.y);
        for (j, &label) in labels.iter().enumerate() {
            for (res, hs) in residual.iter_mut().zip(&columns[j][label]) {
                *res -= hs;
            }
        }
        let mut metric =
            residual.iter().map(|z| z.norm_sqr()).sum::<f64>() / channel_use.noise_var.max(MIN_NOISE_VAR);
        for (j, &label) in labels.iter().enumerate() {
            for b in 0..m {
                let l = l_a[j * m + b];
                metric += 0.5 * (l.abs() - constellation.bit(label, b) * l);
            }
        }
        for (j, &label) in labels.iter().enumerate() {
            for b in 0..m {
                let k = j * m + b;
                if constellation.bit(label, b) > 0.0 {
                    best_plus[k] = best_plus[k].min(metric);
                } else {
                    best_minus[k] = best_minus[k].min(metric);
                }
            }
        }
    }
    Ok(best_minus
        .iter()
        .zip(&best_plus)
        .map(|(minus, plus)| minus - plus)
        .collect())
}
