use mimo_turbo::channel::snr_to_noise_var;
use mimo_turbo::coding::{estimate_ber, info_positions, siso_decode, SisoMode};
use mimo_turbo::iterative::{rwc_flags, run_frame, run_frame_observed, ter_threshold, Link, ReceiverConfig};
use mimo_turbo::modem::Constellation;
use mimo_turbo::sphere::{soft_demap, ClipMode, SdConfig};

fn link(k: usize) -> Link {
    Link::new(4, 4, Constellation::qam16(), k, 77).unwrap()
}

#[test]
fn approximate_receiver_agrees_with_exact_on_hard_decisions() {
    let ter = 2e-3;
    let link = link(4608);
    let tx = link.transmit_frame(77, 4, snr_to_noise_var(10.5, 4)).unwrap();
    let run = |mode, window| {
        run_frame(&link, &tx, &ReceiverConfig { mode, ter, window, max_iterations: 5 }).unwrap()
    };
    let exact = run(ClipMode::Exact, None);
    let approx = run(ClipMode::SuDapdc, Some(1));
    let n_i = exact.decisions.len();
    let agree = exact.decisions.iter().zip(&approx.decisions).filter(|(a, b)| a == b).count();
    assert!(agree as f64 >= (1.0 - 5.0 * ter) * n_i as f64, "{agree} of {n_i}");
}

#[test]
fn exact_mode_reproduces_the_classical_loop() {
    let k = 1024;
    let link = link(k);
    let tx = link.transmit_frame(77, 1, snr_to_noise_var(9.0, 4)).unwrap();
    let q_max = 4;
    let ter = 1e-4;
    let out = run_frame(
        &link,
        &tx,
        &ReceiverConfig { mode: ClipMode::Exact, ter, window: None, max_iterations: q_max },
    )
    .unwrap();

    let c = &link.constellation;
    let info: Vec<usize> = info_positions(k).collect();
    let mut l_a = vec![0.0; k];
    let mut app_info = Vec::new();
    let mut iterations = 0;
    for _ in 0..q_max {
        iterations += 1;
        let mut l_e = vec![0.0; k];
        for (u, cu) in tx.channel_uses.iter().enumerate() {
            let r = tx.layout.use_range(u);
            let res = soft_demap(cu, c, &l_a[r.clone()], &[false; 16], &SdConfig::exact(cu.noise_var), None).unwrap();
            l_e[r].copy_from_slice(&res.ext_llrs);
        }
        let dec = siso_decode(&link.permutation.deinterleave(&l_e).unwrap(), &link.trellis, SisoMode::Full).unwrap();
        app_info = info.iter().map(|&p| dec.app_llrs[p]).collect();
        if estimate_ber(&app_info) <= ter {
            break;
        }
        l_a = link.permutation.interleave(&dec.ext_llrs).unwrap();
    }
    assert_eq!(out.stats.len(), iterations);
    let ours: Vec<f64> = info.iter().map(|&p| out.llrs.dec_d[p]).collect();
    assert_eq!(ours, app_info);
}

#[test]
fn flags_come_from_the_previous_decoder_pass() {
    let k = 2048;
    let link = link(k);
    let tx = link.transmit_frame(77, 2, snr_to_noise_var(11.0, 4)).unwrap();
    let ter = 1e-3;
    let l_ter = ter_threshold(ter).unwrap();
    let cfg = |q| ReceiverConfig { mode: ClipMode::SuPdc, ter, window: Some(2), max_iterations: q };

    let mut seen: Vec<Vec<bool>> = Vec::new();
    let full = run_frame_observed(&link, &tx, &cfg(5), |ev| {
        if seen.len() <= ev.iteration {
            seen.push(Vec::new());
        }
        seen[ev.iteration].extend_from_slice(ev.flags);
    })
    .unwrap();
    assert!(seen[0].iter().all(|f| !f));
    for q in 1..full.stats.len() {
        let before = run_frame(&link, &tx, &cfg(q)).unwrap();
        let expected = rwc_flags(&before.llrs.dec_e, &before.llrs.dec_d, l_ter);
        assert_eq!(link.permutation.deinterleave(&seen[q]).unwrap(), expected, "iteration {q}");
    }
}

#[test]
fn nothing_runs_after_the_stop() {
    let link = link(1024);
    let tx = link.transmit_frame(77, 3, snr_to_noise_var(14.0, 4)).unwrap();
    let cfg = ReceiverConfig { mode: ClipMode::SuDapdc, ter: 1e-2, window: Some(1), max_iterations: 8 };
    let mut last = 0;
    let out = run_frame_observed(&link, &tx, &cfg, |ev| last = last.max(ev.iteration)).unwrap();
    let stop = out.stats.iter().position(|s| s.stopped).expect("converges at 14 dB");
    assert_eq!(out.stats.len(), stop + 1);
    assert_eq!(last, stop);
}
