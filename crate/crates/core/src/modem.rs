//! Gray-labelled square QAM and the framing of interleaved coded bits into
//! per-antenna blocks.
//!
//! Bits are bipolar throughout: logical 1 is `+1.0`, logical 0 is `-1.0`.
//! Within a block the first bit is the most significant bit of the label.

use num_complex::Complex64;
use std::str::FromStr;

use crate::{Error, Result};

/// A square QAM constellation with unit average energy.
///
/// `points[label]` is the symbol carrying `label`; label bit `b` (counted from
/// the most significant end) is bit `b` of the block.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    name: &'static str,
    bits_per_symbol: usize,
    points: Vec<Complex64>,
}

/// Gray-coded PAM level for an `n`-bit axis label, unnormalized (odd integers).
fn gray_pam_level(label: usize, n: usize) -> f64 {
    // Gray → binary rank.
    let mut rank = label;
    let mut shift = label >> 1;
    while shift != 0 {
        rank ^= shift;
        shift >>= 1;
    }
    let levels = 1usize << n;
    (2 * rank) as f64 - (levels - 1) as f64
}

impl Constellation {
    pub fn qpsk() -> Self {
        Self::square_qam("qpsk", 2)
    }

    pub fn qam16() -> Self {
        Self::square_qam("16qam", 4)
    }

    fn square_qam(name: &'static str, bits_per_symbol: usize) -> Self {
        let half = bits_per_symbol / 2;
        let mask = (1usize << half) - 1;
        let size = 1usize << bits_per_symbol;
        let levels = 1usize << half;
        // Mean energy of a √M-PAM axis with odd-integer levels is (M−1)/3 per axis.
        let energy = 2.0 * ((levels * levels - 1) as f64) / 3.0;
        let norm = energy.sqrt().recip();
        let points = (0..size)
            .map(|label| {
                let re = gray_pam_level(label >> half, half);
                let im = gray_pam_level(label & mask, half);
                Complex64::new(re, im) * norm
            })
            .collect();
        Self {
            name,
            bits_per_symbol,
            points,
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Bipolar value of bit `b` of `label`.
    #[inline]
    pub fn bit(&self, label: usize, b: usize) -> f64 {
        if (label >> (self.bits_per_symbol - 1 - b)) & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// Label carried by a bipolar bit block.
    pub fn label_of(&self, bits: &[f64]) -> Result<usize> {
        if bits.len() != self.bits_per_symbol {
            return Err(Error::DimensionMismatch {
                expected: self.bits_per_symbol,
                actual: bits.len(),
            });
        }
        Ok(bits
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | usize::from(b > 0.0)))
    }

    /// Maps one bipolar block onto its constellation point.
    pub fn map_block(&self, bits: &[f64]) -> Result<Complex64> {
        Ok(self.points[self.label_of(bits)?])
    }
}

impl FromStr for Constellation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" => Ok(Self::qpsk()),
            "16qam" | "qam16" | "16-qam" => Ok(Self::qam16()),
            other => Err(Error::UnknownConstellation(other.to_string())),
        }
    }
}

/// Location of a coded bit inside a frame: channel use, antenna, bit-in-block
/// (all zero-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitPosition {
    pub channel_use: usize,
    pub antenna: usize,
    pub bit: usize,
}

/// Bookkeeping for the bit ↔ (use, antenna, bit) layout of a frame.
///
/// Bit `k` (zero-based) sits in block `⌊k / m⌋` counted across the frame,
/// i.e. consecutive blocks fill antennas 1..M_T of one channel use before the
/// next use starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub num_tx: usize,
    pub bits_per_symbol: usize,
    pub channel_uses: usize,
}

impl FrameLayout {
    pub fn new(len: usize, num_tx: usize, bits_per_symbol: usize) -> Result<Self> {
        let block = num_tx * bits_per_symbol;
        if block == 0 || len % block != 0 {
            return Err(Error::NotDivisible { len, block });
        }
        Ok(Self {
            num_tx,
            bits_per_symbol,
            channel_uses: len / block,
        })
    }

    pub fn bits_per_use(&self) -> usize {
        self.num_tx * self.bits_per_symbol
    }

    pub fn len(&self) -> usize {
        self.channel_uses * self.bits_per_use()
    }

    pub fn is_empty(&self) -> bool {
        self.channel_uses == 0
    }

    pub fn position(&self, k: usize) -> BitPosition {
        let per_use = self.bits_per_use();
        let within = k % per_use;
        BitPosition {
            channel_use: k / per_use,
            antenna: within / self.bits_per_symbol,
            bit: within % self.bits_per_symbol,
        }
    }

    pub fn index(&self, pos: BitPosition) -> usize {
        pos.channel_use * self.bits_per_use() + pos.antenna * self.bits_per_symbol + pos.bit
    }

    /// Range of frame bit indices carried by one channel use.
    pub fn use_range(&self, u: usize) -> std::ops::Range<usize> {
        let per_use = self.bits_per_use();
        u * per_use..(u + 1) * per_use
    }
}

/// Groups interleaved coded bits into symbol vectors `s_u`, one per channel use.
pub fn frame_bits(
    coded_bits: &[f64],
    num_tx: usize,
    constellation: &Constellation,
) -> Result<(FrameLayout, Vec<Vec<Complex64>>)> {
    let layout = FrameLayout::new(coded_bits.len(), num_tx, constellation.bits_per_symbol())?;
    let m = constellation.bits_per_symbol();
    let symbols = coded_bits
        .chunks(layout.bits_per_use())
        .map(|use_bits| {
            use_bits
                .chunks(m)
                .map(|block| constellation.map_block(block))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((layout, symbols))
}

/// Recovers the bipolar bit sequence from framed symbol labels.
pub fn unframe_labels(labels: &[Vec<usize>], constellation: &Constellation) -> Vec<f64> {
    let m = constellation.bits_per_symbol();
    labels
        .iter()
        .flatten()
        .flat_map(|&label| (0..m).map(move |b| constellation.bit(label, b)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn label_bits(c: &Constellation, label: usize) -> Vec<f64> {
        (0..c.bits_per_symbol()).map(|b| c.bit(label, b)).collect()
    }

    #[test]
    fn qpsk_gray_point_for_ones() {
        let c = Constellation::qpsk();
        let p = c.map_block(&[1.0, 1.0]).unwrap();
        let s = 0.5f64.sqrt();
        assert!((p - Complex64::new(s, s)).norm() < 1e-15);
        assert_eq!(c.label_of(&[1.0, 1.0]).unwrap(), 0b11);
    }

    #[test]
    fn qam16_is_a_unit_energy_bijection() {
        let c = Constellation::qam16();
        let mut seen = Vec::new();
        let mut energy = 0.0;
        for label in 0..16 {
            let p = c.map_block(&label_bits(&c, label)).unwrap();
            assert!(seen.iter().all(|q: &Complex64| (q - p).norm() > 1e-9));
            seen.push(p);
            energy += p.norm_sqr();
        }
        assert!((energy / 16.0 - 1.0).abs() < 1e-12);
        assert!((Constellation::qpsk().points().iter().map(|p| p.norm_sqr()).sum::<f64>() / 4.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qam16_axes_are_gray() {
        let c = Constellation::qam16();
        // Rank-adjacent points along either axis differ in exactly one label bit.
        for a in 0..16usize {
            for b in 0..16usize {
                let (pa, pb) = (c.point(a), c.point(b));
                let step = 2.0 / 10f64.sqrt();
                let adjacent_re = (pa.im - pb.im).abs() < 1e-9 && ((pa.re - pb.re).abs() - step).abs() < 1e-9;
                let adjacent_im = (pa.re - pb.re).abs() < 1e-9 && ((pa.im - pb.im).abs() - step).abs() < 1e-9;
                if adjacent_re || adjacent_im {
                    assert_eq!((a ^ b).count_ones(), 1, "labels {a:04b} {b:04b}");
                }
            }
        }
    }

    #[test]
    fn qam16_first_bits_label_real_axis() {
        let c = Constellation::qam16();
        // Labels 00xx share a real level, as do 10xx, etc.
        for hi in 0..4 {
            let re = c.point(hi << 2).re;
            for lo in 0..4 {
                assert!((c.point((hi << 2) | lo).re - re).abs() < 1e-15);
            }
        }
        assert!(c.point(0b0000).re < 0.0 && c.point(0b1000).re > 0.0);
    }

    #[test]
    fn wrong_block_length_is_rejected() {
        assert!(Constellation::qam16().map_block(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn names_parse() {
        assert_eq!("16qam".parse::<Constellation>().unwrap(), Constellation::qam16());
        assert_eq!("QPSK".parse::<Constellation>().unwrap(), Constellation::qpsk());
        assert!("8psk".parse::<Constellation>().is_err());
    }

    #[test]
    fn framing_counts_channel_uses() {
        let c = Constellation::qam16();
        let (layout, syms) = frame_bits(&[1.0; 16], 4, &c).unwrap();
        assert_eq!(layout.channel_uses, 1);
        assert_eq!(syms.len(), 1);
        assert_eq!(FrameLayout::new(18432, 4, 4).unwrap().channel_uses, 1152);
        assert!(frame_bits(&[1.0; 18], 4, &c).is_err());
    }

    #[test]
    fn framing_places_bits_by_block() {
        let layout = FrameLayout::new(32, 4, 4).unwrap();
        assert_eq!(
            layout.position(21),
            BitPosition { channel_use: 1, antenna: 1, bit: 1 }
        );
    }

    proptest! {
        #[test]
        fn frame_then_unframe_roundtrips(bits in proptest::collection::vec(any::<bool>(), 1..8usize)) {
            let c = Constellation::qam16();
            let mut coded: Vec<f64> = bits.iter().cycle().take(16 * 5).map(|&b| if b { 1.0 } else { -1.0 }).collect();
            coded.rotate_left(bits.len() % 7);
            let (layout, syms) = frame_bits(&coded, 4, &c).unwrap();
            let labels: Vec<Vec<usize>> = syms
                .iter()
                .map(|v| v.iter().map(|p| c.points().iter().position(|q| (q - p).norm() < 1e-12).unwrap()).collect())
                .collect();
            prop_assert_eq!(unframe_labels(&labels, &c), coded.clone());
            for k in 0..layout.len() {
                prop_assert_eq!(layout.index(layout.position(k)), k);
            }
        }
    }
}
