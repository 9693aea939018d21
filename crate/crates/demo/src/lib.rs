//! Browser bindings for the iterative MIMO receiver. Every entry point
//! returns a JSON string for the page in `www/` to render.

use rand::Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use mimo_turbo::channel::{complex_gaussian, sample_channel_with, snr_to_noise_var, transmit, ChannelUse};
use mimo_turbo::coding::{encode, info_positions, siso_decode, SisoMode, Trellis};
use mimo_turbo::iterative::{run_frame, ter_threshold, Link, ReceiverConfig};
use mimo_turbo::modem::Constellation;
use mimo_turbo::rng::{substream, Stream};
use mimo_turbo::sphere::{brute_force_maxlog, soft_demap, ClipMode, SdConfig};

fn to_js(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn round(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// Demaps one random 4×4 16-QAM channel use in every demapper mode and
/// reports the LLRs and visited-node counts next to the enumeration result.
#[wasm_bindgen]
pub fn demap_channel_use(snr_db: f64, prior_scale: f64, ter: f64, seed: u64) -> Result<String, JsValue> {
    let c = Constellation::qam16();
    let nv = snr_to_noise_var(snr_db, 4);
    let l_ter = ter_threshold(ter).map_err(to_js)?;
    let mut rng = substream(seed, 0, Stream::Demo);
    let h = sample_channel_with(&mut rng, 4, 4);
    let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..16)).collect();
    let s: Vec<_> = labels.iter().map(|&l| c.point(l)).collect();
    let y = transmit(&h, &s, nv, &mut rng).map_err(to_js)?;
    let bits: Vec<f64> = labels
        .iter()
        .flat_map(|&l| (0..4).map(move |b| if (l >> (3 - b)) & 1 == 1 { 1.0 } else { -1.0 }))
        .collect();
    // A-priori LLRs that mostly point the right way.
    let l_a: Vec<f64> = bits
        .iter()
        .map(|b| prior_scale * (b + 0.6 * complex_gaussian(&mut rng, 1.0).re))
        .collect();
    let cu = ChannelUse::new(h, y, nv).map_err(to_js)?;
    let reference = brute_force_maxlog(&cu, &c, &l_a).map_err(to_js)?;

    let modes: Vec<Value> = ClipMode::ALL
        .iter()
        .map(|&mode| {
            let cfg = SdConfig { mode, l_ter, noise_var: nv };
            let res = soft_demap(&cu, &c, &l_a, &[false; 16], &cfg, None).map_err(to_js)?;
            Ok(json!({
                "mode": mode.as_str(),
                "visited": res.visited_nodes,
                "app": res.app_llrs.iter().map(|v| round(*v)).collect::<Vec<_>>(),
            }))
        })
        .collect::<Result<_, JsValue>>()?;
    Ok(json!({
        "bits": bits,
        "prior": l_a.iter().map(|v| round(*v)).collect::<Vec<_>>(),
        "reference": reference.iter().map(|v| round(*v)).collect::<Vec<_>>(),
        "l_ter": l_ter,
        "modes": modes,
    })
    .to_string())
}

/// Encodes a random block, sends it over BPSK/AWGN and runs one log-MAP pass.
#[wasm_bindgen]
pub fn decode_block(info_bits: usize, snr_db: f64, seed: u64) -> Result<String, JsValue> {
    let trellis = Trellis::rsc_5_7();
    let mut rng = substream(seed, 1, Stream::Demo);
    let info: Vec<f64> = (0..info_bits.max(1))
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let code = encode(&trellis, &info);
    let nv = 10f64.powf(-snr_db / 10.0);
    let channel: Vec<f64> = code
        .iter()
        .map(|&b| {
            let r = b + nv.sqrt() * complex_gaussian(&mut rng, 2.0).re;
            2.0 * r / nv
        })
        .collect();
    let dec = siso_decode(&channel, &trellis, SisoMode::Full).map_err(to_js)?;
    let pos: Vec<usize> = info_positions(code.len()).collect();
    let raw_errors = pos.iter().zip(&info).filter(|(&p, &b)| (channel[p] >= 0.0) != (b > 0.0)).count();
    let dec_errors = pos.iter().zip(&info).filter(|(&p, &b)| (dec.app_llrs[p] >= 0.0) != (b > 0.0)).count();
    Ok(json!({
        "info": info,
        "channel": pos.iter().map(|&p| round(channel[p])).collect::<Vec<_>>(),
        "decoded": pos.iter().map(|&p| round(dec.app_llrs[p])).collect::<Vec<_>>(),
        "raw_errors": raw_errors,
        "decoded_errors": dec_errors,
    })
    .to_string())
}

/// Runs the full iterative receiver on one short frame and returns the
/// per-iteration statistics.
#[wasm_bindgen]
pub fn run_receiver(block_len: usize, snr_db: f64, mode: &str, ter: f64, window: usize, iterations: usize, seed: u64) -> Result<String, JsValue> {
    let mode: ClipMode = mode.parse().map_err(to_js)?;
    let link = Link::new(4, 4, Constellation::qam16(), block_len, seed).map_err(to_js)?;
    let tx = link
        .transmit_frame(seed, 0, snr_to_noise_var(snr_db, 4))
        .map_err(to_js)?;
    let cfg = ReceiverConfig {
        mode,
        ter,
        window: (window > 0).then_some(window),
        max_iterations: iterations,
    };
    let out = run_frame(&link, &tx, &cfg).map_err(to_js)?;
    serde_json::to_string(&out.stats).map_err(to_js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demap_reports_every_mode() {
        let v: Value = serde_json::from_str(&demap_channel_use(12.0, 3.0, 2e-3, 1).unwrap()).unwrap();
        assert_eq!(v["modes"].as_array().unwrap().len(), 6);
        assert_eq!(v["modes"][0]["app"], v["reference"]);
    }

    #[test]
    fn decoding_corrects_errors_at_moderate_snr() {
        let v: Value = serde_json::from_str(&decode_block(400, 3.0, 7).unwrap()).unwrap();
        assert!(v["decoded_errors"].as_u64().unwrap() <= v["raw_errors"].as_u64().unwrap());
    }

    #[test]
    fn receiver_runs_a_short_frame() {
        let v: Value = serde_json::from_str(&run_receiver(1024, 12.0, "su_dapdc", 2e-3, 1, 5, 3).unwrap()).unwrap();
        assert!(!v.as_array().unwrap().is_empty());
    }
}
