//! The turbo receiver loop: soft demapping, de-interleaving, SISO decoding,
//! early stopping and RWC flag maintenance.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_channel_with, transmit, ChannelUse};
use crate::coding::{encode, estimate_ber, info_len, info_positions, siso_decode, SisoMode, SisoResult, Trellis};
use crate::interleave::Permutation;
use crate::modem::{frame_bits, Constellation, FrameLayout};
use crate::rng::{substream, Stream};
use crate::sphere::{soft_demap, ClipMode, PreviousLlrs, SdConfig, SdResult};
use crate::{Error, Result};

/// LLR threshold matching a target error rate: `ln(1/ter − 1)`.
pub fn ter_threshold(ter: f64) -> Result<f64> {
    if !(ter > 0.0 && ter <= 0.5) {
        return Err(Error::InvalidTer(ter));
    }
    Ok((1.0 / ter - 1.0).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Stop,
    Continue,
}

/// Stops once the estimated BER of the information bits reaches `ter`.
pub fn check_early_stop(app_info: &[f64], ter: f64) -> StopDecision {
    if estimate_ber(app_info) <= ter {
        StopDecision::Stop
    } else {
        StopDecision::Continue
    }
}

/// RWC flags in decoder order and their channel-order image.
#[derive(Debug, Clone, PartialEq)]
pub struct RwcFlags {
    pub g: Vec<bool>,
    pub g_interleaved: Vec<bool>,
}

impl RwcFlags {
    pub fn cleared(len: usize) -> Self {
        Self {
            g: vec![false; len],
            g_interleaved: vec![false; len],
        }
    }

    pub fn non_rwc_count(&self) -> usize {
        self.g.iter().filter(|&&f| !f).count()
    }
}

/// `g(k) = |L̃_E(k)| > l_ter ∧ |L̃_D(k)| > l_ter`, recomputed from scratch.
pub fn rwc_flags(l_e_dec: &[f64], l_d_dec: &[f64], l_ter: f64) -> Vec<bool> {
    l_e_dec
        .iter()
        .zip(l_d_dec)
        .map(|(e, d)| e.abs() > l_ter && d.abs() > l_ter)
        .collect()
}

pub fn update_rwc_flags(
    l_e_dec: &[f64],
    l_d_dec: &[f64],
    l_ter: f64,
    perm: &Permutation,
) -> Result<RwcFlags> {
    if l_e_dec.len() != l_d_dec.len() {
        return Err(Error::DimensionMismatch {
            expected: l_e_dec.len(),
            actual: l_d_dec.len(),
        });
    }
    let g = rwc_flags(l_e_dec, l_d_dec, l_ter);
    let g_interleaved = perm.interleave(&g)?;
    Ok(RwcFlags { g, g_interleaved })
}

/// Demapper-side and decoder-side LLRs of one frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LlrFrame {
    pub iteration: usize,
    /// Channel order.
    pub l_a: Vec<f64>,
    pub l_d: Vec<f64>,
    pub l_e: Vec<f64>,
    /// Decoder order.
    pub dec_a: Vec<f64>,
    pub dec_d: Vec<f64>,
    pub dec_e: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub ber_estimate: f64,
    /// Genie BER against the transmitted information bits.
    pub ber_true: f64,
    /// Cumulative visited nodes over iterations `0..=iteration`.
    pub visited_nodes: u64,
    /// Cumulative β stores.
    pub beta_stores: u64,
    /// Bits not flagged RWC during this iteration.
    pub non_rwc_count: usize,
    pub stopped: bool,
}

/// Everything the receiver sees of one transmitted frame, plus the genie data.
#[derive(Debug, Clone)]
pub struct TransmittedFrame {
    pub info_bits: Vec<f64>,
    /// Coded bits in decoder order.
    pub coded_bits: Vec<f64>,
    pub layout: FrameLayout,
    pub channel_uses: Vec<ChannelUse>,
}

/// Link geometry shared by every frame of a run.
#[derive(Debug, Clone)]
pub struct Link {
    pub num_tx: usize,
    pub num_rx: usize,
    pub constellation: Constellation,
    pub trellis: Trellis,
    pub permutation: Permutation,
}

impl Link {
    pub fn new(num_tx: usize, num_rx: usize, constellation: Constellation, block_len: usize, seed: u64) -> Result<Self> {
        if num_rx < num_tx {
            return Err(Error::InvalidConfig(format!(
                "need m_r >= m_t, got m_r = {num_rx}, m_t = {num_tx}"
            )));
        }
        FrameLayout::new(block_len, num_tx, constellation.bits_per_symbol())?;
        if block_len % 2 != 0 || block_len / 2 <= crate::coding::TAIL_LEN {
            return Err(Error::InvalidConfig(format!(
                "block length {block_len} cannot hold a terminated rate-1/2 codeword"
            )));
        }
        Ok(Self {
            num_tx,
            num_rx,
            constellation,
            trellis: Trellis::rsc_5_7(),
            permutation: Permutation::build(block_len, seed),
        })
    }

    pub fn block_len(&self) -> usize {
        self.permutation.len()
    }

    /// Draws data, channels and noise for frame `frame` of the run seeded by
    /// `seed`. Channel and noise draws do not depend on `noise_var` beyond
    /// scaling, so frames at different SNRs see the same realizations.
    pub fn transmit_frame(&self, seed: u64, frame: u64, noise_var: f64) -> Result<TransmittedFrame> {
        let k = self.block_len();
        let mut data_rng = substream(seed, frame, Stream::Data);
        let info_bits: Vec<f64> = (0..info_len(k))
            .map(|_| if data_rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let coded_bits = encode(&self.trellis, &info_bits);
        let channel_bits = self.permutation.interleave(&coded_bits)?;
        let (layout, symbols) = frame_bits(&channel_bits, self.num_tx, &self.constellation)?;

        let mut channel_rng = substream(seed, frame, Stream::Channel);
        let mut noise_rng = substream(seed, frame, Stream::Noise);
        let channel_uses = symbols
            .iter()
            .map(|s| {
                let h = sample_channel_with(&mut channel_rng, self.num_rx, self.num_tx);
                let y = transmit(&h, s, noise_var, &mut noise_rng)?;
                ChannelUse::new(h, y, noise_var)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TransmittedFrame {
            info_bits,
            coded_bits,
            layout,
            channel_uses,
        })
    }
}

/// Receiver settings for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverConfig {
    pub mode: ClipMode,
    pub ter: f64,
    /// Selective decoding window; `None` decodes every stage.
    pub window: Option<usize>,
    pub max_iterations: usize,
}

/// One soft-demapper call, exposed to observers for auditing.
#[derive(Debug)]
pub struct DemapEvent<'a> {
    pub iteration: usize,
    pub channel_use: usize,
    pub use_data: &'a ChannelUse,
    pub l_a: &'a [f64],
    pub flags: &'a [bool],
    pub config: &'a SdConfig,
    pub result: &'a SdResult,
}

#[derive(Debug, Clone)]
pub struct FrameOutcome {
    pub stats: Vec<IterationStats>,
    /// LLRs at the last executed iteration.
    pub llrs: LlrFrame,
    /// Hard decisions on the information bits (bipolar).
    pub decisions: Vec<f64>,
}

pub fn run_frame(link: &Link, tx: &TransmittedFrame, cfg: &ReceiverConfig) -> Result<FrameOutcome> {
    run_frame_observed(link, tx, cfg, |_| {})
}

/// [`run_frame`] with a callback after every soft-demapper call.
pub fn run_frame_observed(
    link: &Link,
    tx: &TransmittedFrame,
    cfg: &ReceiverConfig,
    mut observer: impl FnMut(&DemapEvent<'_>),
) -> Result<FrameOutcome> {
    if cfg.max_iterations == 0 {
        return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
    }
    if cfg.window == Some(0) {
        return Err(Error::InvalidWindow);
    }
    let k = link.block_len();
    if tx.coded_bits.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: tx.coded_bits.len(),
        });
    }
    let l_ter = ter_threshold(cfg.ter)?;
    let sd_cfg = SdConfig {
        mode: cfg.mode,
        l_ter,
        noise_var: tx.channel_uses.first().map_or(1.0, |u| u.noise_var),
    };
    let perm = &link.permutation;
    let info: Vec<usize> = info_positions(k).collect();

    let mut frame = LlrFrame {
        l_a: vec![0.0; k],
        l_d: vec![0.0; k],
        l_e: vec![0.0; k],
        ..Default::default()
    };
    let mut flags = RwcFlags::cleared(k);
    let mut previous_dec: Option<SisoResult> = None;
    let mut stats = Vec::new();
    let (mut visited, mut betas) = (0u64, 0u64);

    for q in 0..cfg.max_iterations {
        frame.iteration = q;
        let non_rwc_count = flags.non_rwc_count();

        let mut l_d = vec![0.0; k];
        let mut l_e = vec![0.0; k];
        for (u, use_data) in tx.channel_uses.iter().enumerate() {
            let range = tx.layout.use_range(u);
            let use_cfg = SdConfig {
                noise_var: use_data.noise_var,
                ..sd_cfg
            };
            let prev = (q > 0).then(|| PreviousLlrs {
                app: &frame.l_d[range.clone()],
                ext: &frame.l_e[range.clone()],
            });
            let res = soft_demap(
                use_data,
                &link.constellation,
                &frame.l_a[range.clone()],
                &flags.g_interleaved[range.clone()],
                &use_cfg,
                prev,
            )?;
            observer(&DemapEvent {
                iteration: q,
                channel_use: u,
                use_data,
                l_a: &frame.l_a[range.clone()],
                flags: &flags.g_interleaved[range.clone()],
                config: &use_cfg,
                result: &res,
            });
            visited += res.visited_nodes;
            l_d[range.clone()].copy_from_slice(&res.app_llrs);
            l_e[range].copy_from_slice(&res.ext_llrs);
        }
        frame.l_d = l_d;
        frame.l_e = l_e;

        frame.dec_a = perm.deinterleave(&frame.l_e)?;
        let mode = match (cfg.window, &previous_dec) {
            (Some(window), Some(prev)) => SisoMode::Selective {
                window,
                flags: &flags.g,
                previous: Some(prev),
            },
            _ => SisoMode::Full,
        };
        let dec = siso_decode(&frame.dec_a, &link.trellis, mode)?;
        betas += dec.beta_store_count as u64;
        frame.dec_d = dec.app_llrs.clone();
        frame.dec_e = dec.ext_llrs.clone();

        let app_info: Vec<f64> = info.iter().map(|&p| dec.app_llrs[p]).collect();
        let ber_estimate = estimate_ber(&app_info);
        let errors = app_info
            .iter()
            .zip(&tx.info_bits)
            .filter(|(l, b)| (**l >= 0.0) != (**b > 0.0))
            .count();
        let ber_true = errors as f64 / app_info.len().max(1) as f64;
        let stop = check_early_stop(&app_info, cfg.ter) == StopDecision::Stop;
        stats.push(IterationStats {
            iteration: q,
            ber_estimate,
            ber_true,
            visited_nodes: visited,
            beta_stores: betas,
            non_rwc_count,
            stopped: stop,
        });
        if stop || q + 1 == cfg.max_iterations {
            break;
        }

        flags = update_rwc_flags(&dec.ext_llrs, &dec.app_llrs, l_ter, perm)?;
        frame.l_a = perm.interleave(&dec.ext_llrs)?;
        previous_dec = Some(dec);
    }

    let decisions = info
        .iter()
        .map(|&p| if frame.dec_d[p] >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    Ok(FrameOutcome {
        stats,
        llrs: frame,
        decisions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::snr_to_noise_var;
    use crate::sphere::brute_force_maxlog;

    const L_TER: f64 = 6.212_606_095_751_519;

    fn small_link(k: usize) -> Link {
        Link::new(4, 4, Constellation::qam16(), k, 11).unwrap()
    }

    #[test]
    fn threshold_values() {
        assert!((ter_threshold(2e-3).unwrap() - 499f64.ln()).abs() < 1e-15);
        assert!((ter_threshold(2e-3).unwrap() - 6.2126).abs() < 1e-4);
        assert_eq!(ter_threshold(0.5).unwrap(), 0.0);
        assert!((ter_threshold(1e-4).unwrap() - 9.2102).abs() < 1e-4);
        assert!(ter_threshold(0.0).is_err());
        assert!(ter_threshold(0.7).is_err());
        assert!(ter_threshold(f64::NAN).is_err());
    }

    #[test]
    fn stop_rule_is_inclusive() {
        let l = 499f64.ln();
        assert_eq!(check_early_stop(&[l; 8], 2e-3), StopDecision::Stop);
        assert_eq!(check_early_stop(&[0.0; 8], 2e-3), StopDecision::Continue);
        let mixed = [9.0, -12.0, 3.0, 20.0];
        let direct: f64 = mixed.iter().map(|l: &f64| 1.0 / (1.0 + l.abs().exp())).sum::<f64>() / 4.0;
        let expect = if direct <= 0.02 { StopDecision::Stop } else { StopDecision::Continue };
        assert_eq!(check_early_stop(&mixed, 0.02), expect);
        let expect = if direct <= 0.01 { StopDecision::Stop } else { StopDecision::Continue };
        assert_eq!(check_early_stop(&mixed, 0.01), expect);
    }

    #[test]
    fn rwc_flag_rules() {
        assert_eq!(rwc_flags(&[L_TER], &[L_TER], L_TER), vec![false]);
        assert_eq!(rwc_flags(&[8.0], &[9.0], L_TER), vec![true]);
        assert_eq!(rwc_flags(&[2.0], &[9.0], L_TER), vec![false]);
        assert_eq!(rwc_flags(&[-8.0], &[-9.0], L_TER), vec![true]);
        let perm = Permutation::build(4, 2);
        let f = update_rwc_flags(&[8.0, 1.0, -9.0, 7.0], &[9.0, 9.0, -9.5, 1.0], L_TER, &perm).unwrap();
        assert_eq!(f.g, vec![true, false, true, false]);
        assert_eq!(f.g_interleaved, perm.interleave(&f.g).unwrap());
        assert_eq!(f.non_rwc_count(), 2);
        assert!(update_rwc_flags(&[1.0], &[1.0, 2.0], L_TER, &perm).is_err());
    }

    #[test]
    fn noiseless_frame_stops_immediately() {
        let link = small_link(512);
        let tx = link.transmit_frame(5, 0, 0.0).unwrap();
        for mode in [ClipMode::Exact, ClipMode::SuDapdc] {
            let cfg = ReceiverConfig { mode, ter: 2e-3, window: Some(1), max_iterations: 5 };
            let out = run_frame(&link, &tx, &cfg).unwrap();
            assert_eq!(out.stats.len(), 1);
            assert!(out.stats[0].stopped);
            assert_eq!(out.stats[0].ber_true, 0.0);
            assert_eq!(out.decisions, tx.info_bits);
        }
    }

    #[test]
    fn single_iteration_is_detection_plus_one_decode() {
        let link = small_link(256);
        let nv = snr_to_noise_var(6.0, 4);
        let tx = link.transmit_frame(3, 1, nv).unwrap();
        let cfg = ReceiverConfig { mode: ClipMode::Exact, ter: 1e-9, window: None, max_iterations: 1 };
        let out = run_frame(&link, &tx, &cfg).unwrap();
        assert_eq!(out.stats.len(), 1);

        let mut l_e = vec![0.0; 256];
        for (u, cu) in tx.channel_uses.iter().enumerate() {
            let llr = brute_force_maxlog(cu, &link.constellation, &[0.0; 16]).unwrap();
            l_e[tx.layout.use_range(u)].copy_from_slice(&llr);
        }
        let dec_a = link.permutation.deinterleave(&l_e).unwrap();
        let dec = siso_decode(&dec_a, &link.trellis, SisoMode::Full).unwrap();
        for (a, b) in dec.app_llrs.iter().zip(&out.llrs.dec_d) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn flags_are_causal_and_counters_monotone() {
        let link = small_link(1024);
        let nv = snr_to_noise_var(7.0, 4);
        let tx = link.transmit_frame(8, 2, nv).unwrap();
        let cfg = ReceiverConfig { mode: ClipMode::SuDapdc, ter: 1e-4, window: Some(1), max_iterations: 5 };
        let mut seen_flags: Vec<Vec<bool>> = Vec::new();
        let mut per_iter_flags: Vec<bool> = Vec::new();
        let mut last_iter = usize::MAX;
        let out = run_frame_observed(&link, &tx, &cfg, |ev| {
            if ev.iteration != last_iter {
                if last_iter != usize::MAX {
                    seen_flags.push(std::mem::take(&mut per_iter_flags));
                }
                last_iter = ev.iteration;
            }
            per_iter_flags.extend_from_slice(ev.flags);
            for k in 0..16 {
                if ev.flags[k] {
                    assert_eq!(ev.result.app_llrs.len(), 16);
                }
            }
        })
        .unwrap();
        seen_flags.push(per_iter_flags);
        assert!(seen_flags[0].iter().all(|&f| !f));
        assert_eq!(out.stats[0].non_rwc_count, 1024);
        for w in out.stats.windows(2) {
            assert!(w[1].visited_nodes >= w[0].visited_nodes);
            assert!(w[1].beta_stores >= w[0].beta_stores);
        }
        for (q, flags) in seen_flags.iter().enumerate() {
            assert_eq!(out.stats[q].non_rwc_count, flags.iter().filter(|&&f| !f).count());
        }
    }

    #[test]
    fn invalid_receiver_configs() {
        let link = small_link(256);
        let tx = link.transmit_frame(1, 0, 0.5).unwrap();
        let base = ReceiverConfig { mode: ClipMode::Exact, ter: 2e-3, window: None, max_iterations: 2 };
        assert!(run_frame(&link, &tx, &ReceiverConfig { max_iterations: 0, ..base }).is_err());
        assert!(run_frame(&link, &tx, &ReceiverConfig { window: Some(0), ..base }).is_err());
        assert!(run_frame(&link, &tx, &ReceiverConfig { ter: 0.9, ..base }).is_err());
        assert!(Link::new(4, 2, Constellation::qam16(), 256, 0).is_err());
        assert!(Link::new(4, 4, Constellation::qam16(), 250, 0).is_err());
    }
}
