//! Seeded pseudo-random bit interleaver.

use rand::seq::SliceRandom;

use crate::rng::{substream, Stream};
use crate::{Error, Result};

/// A permutation of `0..len`. `interleave(v)[i] = v[forward[i]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    /// Uniform random permutation from a Fisher–Yates shuffle of the seed's
    /// interleaver substream.
    pub fn build(len: usize, seed: u64) -> Self {
        let mut forward: Vec<usize> = (0..len).collect();
        forward.shuffle(&mut substream(seed, 0, Stream::Interleaver));
        Self::from_forward(forward).expect("shuffle yields a permutation")
    }

    pub fn identity(len: usize) -> Self {
        Self::from_forward((0..len).collect()).expect("identity is a permutation")
    }

    pub fn from_forward(forward: Vec<usize>) -> Result<Self> {
        let len = forward.len();
        let mut inverse = vec![usize::MAX; len];
        for (i, &f) in forward.iter().enumerate() {
            if f >= len || inverse[f] != usize::MAX {
                return Err(Error::InvalidConfig(format!(
                    "index {f} at position {i} breaks the permutation"
                )));
            }
            inverse[f] = i;
        }
        Ok(Self { forward, inverse })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    fn check<T>(&self, v: &[T]) -> Result<()> {
        if v.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// Decoder order → channel order.
    pub fn interleave<T: Copy>(&self, v: &[T]) -> Result<Vec<T>> {
        self.check(v)?;
        Ok(self.forward.iter().map(|&f| v[f]).collect())
    }

    /// Channel order → decoder order.
    pub fn deinterleave<T: Copy>(&self, v: &[T]) -> Result<Vec<T>> {
        self.check(v)?;
        Ok(self.inverse.iter().map(|&i| v[i]).collect())
    }
}
