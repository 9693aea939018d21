//! Uncorrelated Rayleigh flat-fading MIMO channel with complex AWGN.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::numerics::{qr_decompose, rotate_received, ComplexMatrix, ComplexVector};
use crate::rng::{substream, Stream};
use crate::{Error, Result};

/// One channel realization together with everything the demapper needs.
#[derive(Debug, Clone)]
pub struct ChannelUse {
    pub h: ComplexMatrix,
    pub q: ComplexMatrix,
    pub r: ComplexMatrix,
    pub y: ComplexVector,
    pub y_rot: ComplexVector,
    /// Total complex noise variance per receive entry (2σₙ²).
    pub noise_var: f64,
}

impl ChannelUse {
    /// Factors `h` and rotates `y`.
    pub fn new(h: ComplexMatrix, y: ComplexVector, noise_var: f64) -> Result<Self> {
        let qr = qr_decompose(&h)?;
        let y_rot = rotate_received(&qr.q, &y)?;
        Ok(Self {
            h,
            q: qr.q,
            r: qr.r,
            y,
            y_rot,
            noise_var,
        })
    }

    pub fn num_tx(&self) -> usize {
        self.h.cols()
    }
}

/// Circularly-symmetric complex Gaussian sample with total variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let sd = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * sd, im * sd)
}

/// Draws an `m_r × m_t` matrix of i.i.d. CN(0, 1) entries.
pub fn sample_channel_with<R: Rng + ?Sized>(rng: &mut R, m_r: usize, m_t: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(m_r, m_t, |_, _| complex_gaussian(rng, 1.0))
}

/// Seeded convenience wrapper around [`sample_channel_with`].
pub fn sample_channel(m_r: usize, m_t: usize, seed: u64) -> ComplexMatrix {
    sample_channel_with(&mut substream(seed, 0, Stream::Channel), m_r, m_t)
}

/// `y = h·s + n`, with `n` i.i.d. complex Gaussian of variance `noise_var`.
pub fn transmit<R: Rng + ?Sized>(
    h: &ComplexMatrix,
    s: &[Complex64],
    noise_var: f64,
    rng: &mut R,
) -> Result<ComplexVector> {
    if noise_var < 0.0 || noise_var.is_nan() {
        return Err(Error::NegativeNoiseVariance(noise_var));
    }
    let mut y = h.mul_vec(s)?;
    if noise_var > 0.0 {
        for v in &mut y {
            *v += complex_gaussian(rng, noise_var);
        }
    }
    Ok(y)
}

/// 2σₙ² for a given SNR in dB.
///
/// SNR is the total received signal energy per receive antenna over the noise
/// power: with unit-energy symbols and unit-variance channel taps each receive
/// antenna collects `m_t` units of signal energy.
pub fn snr_to_noise_var(snr_db: f64, m_t: usize) -> f64 {
    m_t as f64 / 10f64.powf(snr_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_conversion() {
        assert!((snr_to_noise_var(0.0, 4) - 4.0).abs() < 1e-15);
        assert!((snr_to_noise_var(10.0, 4) - 0.4).abs() < 1e-15);
        assert!((snr_to_noise_var(7.0, 4) - 4.0 / 10f64.powf(0.7)).abs() < 1e-15);
        assert!((snr_to_noise_var(7.0, 4) - 0.7981).abs() < 1e-4);
    }

    #[test]
    fn channel_moments() {
        let mut rng = substream(5, 0, Stream::Channel);
        let n = 100_000;
        let (mut var, mut cross) = (0.0, Complex64::new(0.0, 0.0));
        for _ in 0..n {
            let h = sample_channel_with(&mut rng, 2, 2);
            var += h[(0, 0)].norm_sqr();
            cross += h[(0, 0)] * h[(1, 1)].conj();
        }
        assert!((var / n as f64 - 1.0).abs() < 0.02);
        assert!((cross / n as f64).norm() < 0.02);
    }

    #[test]
    fn channel_replays_under_seed() {
        assert_eq!(sample_channel(4, 4, 17), sample_channel(4, 4, 17));
        assert_ne!(sample_channel(4, 4, 17), sample_channel(4, 4, 18));
    }

    #[test]
    fn noiseless_transmission_is_exact() {
        let h = sample_channel(4, 4, 3);
        let s: Vec<_> = (0..4).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let mut rng = substream(1, 0, Stream::Noise);
        assert_eq!(transmit(&h, &s, 0.0, &mut rng).unwrap(), h.mul_vec(&s).unwrap());
        assert!(transmit(&h, &s, -1.0, &mut rng).is_err());
    }

    #[test]
    fn noise_moments() {
        let h = ComplexMatrix::identity(2);
        let s = [Complex64::new(0.5, -0.25), Complex64::new(0.0, 0.0)];
        let mut rng = substream(2, 0, Stream::Noise);
        let n = 100_000;
        let (mut mean, mut var) = (Complex64::new(0.0, 0.0), 0.0);
        for _ in 0..n {
            let y = transmit(&h, &s, 0.3, &mut rng).unwrap();
            mean += y[0];
            var += (y[0] - s[0]).norm_sqr();
            // Second entry carries a zero symbol: pure noise.
            assert!(y[1].norm() < 10.0);
        }
        assert!((mean / n as f64 - s[0]).norm() < 0.01);
        assert!((var / n as f64 - 0.3).abs() < 0.01);
    }

    #[test]
    fn channel_use_rotates_received_vector() {
        let h = sample_channel(4, 4, 8);
        let y = vec![Complex64::new(1.0, 2.0); 4];
        let cu = ChannelUse::new(h, y.clone(), 0.5).unwrap();
        let direct = cu.q.adjoint().mul_vec(&y).unwrap();
        for (a, b) in cu.y_rot.iter().zip(&direct) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
