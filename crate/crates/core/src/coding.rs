//! Rate-1/2 recursive systematic convolutional code with generators (5/7)₈
//! and its log-MAP BCJR soft-input/soft-output decoder.
//!
//! The coded sequence interleaves systematic and parity bits pairwise:
//! `[u_0, p_0, u_1, p_1, ...]`, so trellis stage `t` owns coded positions
//! `2t` and `2t + 1`. Two tail bits return the encoder to the zero state.

use crate::{Error, Result};

/// Log-domain zero.
pub const NEG_INF: f64 = f64::NEG_INFINITY;

/// Number of tail stages appended by [`encode`].
pub const TAIL_LEN: usize = 2;

/// Jacobian logarithm `ln(eᵃ + eᵇ)`.
#[inline]
pub fn max_star(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == NEG_INF {
        return NEG_INF;
    }
    m + (-(a - b).abs()).exp().ln_1p()
}

/// One trellis branch. Outputs are bipolar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub systematic: f64,
    pub parity: f64,
}

/// State-transition structure of the (5/7)₈ RSC code.
///
/// State `s = 2·a_{t−1} + a_{t−2}` holds the last two register values, with
/// `a_t = u_t ⊕ a_{t−1} ⊕ a_{t−2}` (feedback 1+D+D²) and parity
/// `p_t = a_t ⊕ a_{t−2}` (feedforward 1+D²).
#[derive(Debug, Clone, PartialEq)]
pub struct Trellis {
    transitions: Vec<Transition>,
}

fn bipolar(bit: usize) -> f64 {
    if bit == 1 {
        1.0
    } else {
        -1.0
    }
}

impl Trellis {
    pub const NUM_STATES: usize = 4;

    pub fn rsc_5_7() -> Self {
        let mut transitions = Vec::with_capacity(2 * Self::NUM_STATES);
        for from in 0..Self::NUM_STATES {
            for u in 0..2 {
                let (a1, a2) = (from >> 1, from & 1);
                let a = u ^ a1 ^ a2;
                let p = a ^ a2;
                transitions.push(Transition {
                    from,
                    to: (a << 1) | a1,
                    systematic: bipolar(u),
                    parity: bipolar(p),
                });
            }
        }
        Self { transitions }
    }

    pub fn num_states(&self) -> usize {
        Self::NUM_STATES
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Branch leaving `state` on bipolar input `u`.
    pub fn step(&self, state: usize, u: f64) -> Transition {
        self.transitions[2 * state + usize::from(u > 0.0)]
    }

    /// Input that drives the register value to zero from `state`.
    fn tail_input(state: usize) -> f64 {
        bipolar((state >> 1) ^ (state & 1))
    }
}

impl Default for Trellis {
    fn default() -> Self {
        Self::rsc_5_7()
    }
}

/// Encodes bipolar information bits; returns `2·(N_I + 2)` coded bits.
pub fn encode(trellis: &Trellis, info_bits: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * (info_bits.len() + TAIL_LEN));
    let mut state = 0;
    for &u in info_bits {
        let e = trellis.step(state, u);
        out.push(e.systematic);
        out.push(e.parity);
        state = e.to;
    }
    for _ in 0..TAIL_LEN {
        let e = trellis.step(state, Trellis::tail_input(state));
        out.push(e.systematic);
        out.push(e.parity);
        state = e.to;
    }
    debug_assert_eq!(state, 0);
    out
}

/// Number of information bits carried by a terminated codeword of `coded_len` bits.
pub fn info_len(coded_len: usize) -> usize {
    (coded_len / 2).saturating_sub(TAIL_LEN)
}

/// Coded positions of the systematic information bits.
pub fn info_positions(coded_len: usize) -> impl Iterator<Item = usize> {
    (0..info_len(coded_len)).map(|t| 2 * t)
}

/// Output of one SISO decoding pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SisoResult {
    /// A-posteriori LLRs L̃_D.
    pub app_llrs: Vec<f64>,
    /// Extrinsic LLRs L̃_E.
    pub ext_llrs: Vec<f64>,
    /// A-priori values the recursions actually consumed.
    pub apriori_used: Vec<f64>,
    /// Backward state-metric vectors stored for the output computation.
    pub beta_store_count: usize,
    /// Coded positions whose outputs were recomputed.
    pub decoded_positions: Vec<bool>,
}

/// Decoding scope.
#[derive(Debug, Clone, Copy)]
pub enum SisoMode<'a> {
    Full,
    /// Recompute only the stages within `window` stages (centre included) of a
    /// bit whose flag is `false`; all other positions keep `previous`.
    Selective {
        window: usize,
        flags: &'a [bool],
        previous: Option<&'a SisoResult>,
    },
}

/// Stages recomputed in selective mode.
pub fn decoded_stages(flags: &[bool], window: usize) -> Vec<bool> {
    let stages = flags.len() / 2;
    let half = window.saturating_sub(1);
    let mut marked = vec![false; stages];
    // Sweep with a running "reach" instead of painting each window.
    let mut reach_until: Option<usize> = None;
    let mut centres = flags
        .iter()
        .enumerate()
        .filter(|(_, &rwc)| !rwc)
        .map(|(k, _)| k / 2)
        .peekable();
    for (t, slot) in marked.iter_mut().enumerate() {
        while let Some(&c) = centres.peek() {
            if c.saturating_sub(half) <= t {
                let end = c.saturating_add(half);
                reach_until = Some(reach_until.map_or(end, |r: usize| r.max(end)));
                centres.next();
            } else {
                break;
            }
        }
        if let Some(r) = reach_until {
            if t <= r {
                *slot = true;
            }
        }
    }
    marked
}

/// Log-MAP BCJR over a zero-terminated trellis.
pub fn siso_decode(apriori: &[f64], trellis: &Trellis, mode: SisoMode<'_>) -> Result<SisoResult> {
    let k = apriori.len();
    if k % 2 != 0 || k == 0 {
        return Err(Error::NotDivisible { len: k, block: 2 });
    }
    let stages = k / 2;

    let (stage_mask, effective, previous) = match mode {
        SisoMode::Full => (vec![true; stages], apriori.to_vec(), None),
        SisoMode::Selective {
            window,
            flags,
            previous,
        } => {
            if window < 1 {
                return Err(Error::InvalidWindow);
            }
            if flags.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    actual: flags.len(),
                });
            }
            let mask = decoded_stages(flags, window);
            let needs_previous = mask.iter().any(|&m| !m);
            let previous = match previous {
                Some(p) if p.app_llrs.len() == k => Some(p),
                Some(p) => {
                    return Err(Error::DimensionMismatch {
                        expected: k,
                        actual: p.app_llrs.len(),
                    })
                }
                None if needs_previous => {
                    return Err(Error::InvalidConfig(
                        "selective decoding without a previous pass must cover every stage".into(),
                    ))
                }
                None => None,
            };
            let mut effective = apriori.to_vec();
            if let Some(p) = previous {
                for (t, &decoded) in mask.iter().enumerate() {
                    if !decoded {
                        effective[2 * t] = p.apriori_used[2 * t];
                        effective[2 * t + 1] = p.apriori_used[2 * t + 1];
                    }
                }
            }
            (mask, effective, previous)
        }
    };

    let ns = trellis.num_states();
    let gamma = |t: usize, e: &Transition| {
        0.5 * (e.systematic * effective[2 * t] + e.parity * effective[2 * t + 1])
    };

    // Forward metrics are kept for every stage here; only the β side is
    // counted as storage.
    let mut alpha = vec![NEG_INF; (stages + 1) * ns];
    alpha[0] = 0.0;
    for t in 0..stages {
        let (cur, next) = alpha.split_at_mut((t + 1) * ns);
        let cur = &cur[t * ns..];
        let next = &mut next[..ns];
        for e in trellis.transitions() {
            next[e.to] = max_star(next[e.to], cur[e.from] + gamma(t, e));
        }
    }

    let mut beta = vec![NEG_INF; (stages + 1) * ns];
    beta[stages * ns] = 0.0;
    for t in (0..stages).rev() {
        let (cur, next) = beta.split_at_mut((t + 1) * ns);
        let cur = &mut cur[t * ns..];
        for e in trellis.transitions() {
            cur[e.from] = max_star(cur[e.from], next[e.to] + gamma(t, e));
        }
    }

    let (mut app, mut ext) = match previous {
        Some(p) => (p.app_llrs.clone(), p.ext_llrs.clone()),
        None => (vec![0.0; k], vec![0.0; k]),
    };
    let mut decoded_positions = vec![false; k];
    let mut beta_store_count = 0;
    for t in (0..stages).filter(|&t| stage_mask[t]) {
        beta_store_count += 1;
        let mut num = [NEG_INF; 2];
        let mut den = [NEG_INF; 2];
        for e in trellis.transitions() {
            let delta = alpha[t * ns + e.from] + gamma(t, e) + beta[(t + 1) * ns + e.to];
            for (x, bit) in [e.systematic, e.parity].into_iter().enumerate() {
                if bit > 0.0 {
                    num[x] = max_star(num[x], delta);
                } else {
                    den[x] = max_star(den[x], delta);
                }
            }
        }
        for x in 0..2 {
            let pos = 2 * t + x;
            app[pos] = num[x] - den[x];
            ext[pos] = app[pos] - effective[pos];
            decoded_positions[pos] = true;
        }
    }

    Ok(SisoResult {
        app_llrs: app,
        ext_llrs: ext,
        apriori_used: effective,
        beta_store_count,
        decoded_positions,
    })
}

/// BER estimate `(1/N) Σ 1 / (1 + e^{|L|})` over information-bit LLRs.
pub fn estimate_ber(app_info: &[f64]) -> f64 {
    if app_info.is_empty() {
        return 0.0;
    }
    app_info
        .iter()
        .map(|l| 1.0 / (1.0 + l.abs().exp()))
        .sum::<f64>()
        / app_info.len() as f64
}
