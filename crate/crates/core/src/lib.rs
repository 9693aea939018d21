//! Iterative MIMO detection and decoding with approximate soft-information
//! exchange.
//!
//! The receiver alternates between a soft-input/soft-output sphere decoder and
//! a log-MAP BCJR decoder for a (5/7)₈ recursive systematic convolutional
//! code. Bits whose extrinsic and a-posteriori LLRs both exceed the
//! target-error-rate threshold are flagged as reliable and well converging
//! (RWC); their soft information is frozen, the demapper skips their searches,
//! LLR clipping bounds the remaining searches, and the channel decoder only
//! recomputes the neighbourhood of unreliable bits.
//!
//! Module map:
//!
//! - [`numerics`]: complex matrices, thin QR with positive real diagonal.
//! - [`modem`]: Gray-labelled QPSK/16-QAM and per-antenna bit framing.
//! - [`channel`]: Rayleigh flat-fading MIMO channel with complex AWGN.
//! - [`coding`]: RSC trellis, encoder and (selective) log-MAP BCJR.
//! - [`interleave`]: seeded random bit interleaver.
//! - [`sphere`]: depth-first single-tree-search soft demapper with selective
//!   update and performance-driven clipping, plus a brute-force oracle.
//! - [`iterative`]: the turbo receiver loop and its statistics.
//! - [`harness`]: run configuration, Monte Carlo campaigns and reports.

pub mod channel;
pub mod coding;
pub mod error;
pub mod harness;
pub mod interleave;
pub mod iterative;
pub mod modem;
pub mod numerics;
pub mod rng;
pub mod sphere;

pub use error::{Error, Result};
