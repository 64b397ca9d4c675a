//! Quick oracle comparisons runnable from the command line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{apply_channel, build_taps, BlockChannel, NoiseModel, Path, PathSet, TapTensor};
use crate::equalize::{detect_frame, DetectorConfig, Filter};
use crate::flops::FlopCounter;
use crate::frame::{demodulate, modulate, Alphabet, DdFrame, Dft, FrameDims};
use crate::init::{fmi_soft, init_dsgi, DsgiOptions};
use crate::oracle;
use crate::pulse::PulseSpec;
use crate::sinr::SinrState;
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn rand_c(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn random_paths(rng: &mut ChaCha8Rng, count: usize, max_delay: f64, max_doppler: f64, dims: FrameDims, ts: f64) -> PathSet {
    let nu_unit = 1.0 / ((dims.m * dims.n) as f64 * ts);
    PathSet {
        paths: (0..count)
            .map(|_| Path {
                gain: rand_c(rng),
                delay: rng.random_range(0.0..max_delay) * ts,
                doppler: rng.random_range(-max_doppler..max_doppler) * nu_unit,
            })
            .collect(),
    }
}

fn modulation_roundtrip(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let dims = FrameDims::new(16, 8, 4).unwrap();
    let a = Alphabet::new(64).unwrap();
    let dft = Dft::new(8);
    let (frame, _) = DdFrame::random(dims, &a, rng);
    let back = demodulate(&modulate(&frame, &dft), &dft);
    let err = (0..12)
        .flat_map(|m| (0..8).map(move |n| (m, n)))
        .map(|(m, n)| (frame.get(m, n) - back.get(m, n)).norm())
        .fold(0.0, f64::max);
    check("modulation round trip", err < 1e-12, format!("max error {err:.2e}"))
}

fn taps_vs_direct_io(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let dims = FrameDims::new(24, 4, 6).unwrap();
    let ts = 1e-6;
    let pulse = PulseSpec::new(1, 0.25, ts).unwrap();
    let a = Alphabet::new(16).unwrap();
    let dft = Dft::new(4);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let paths = random_paths(rng, 3, 4.0, 2.5, dims, ts);
        let ch: BlockChannel = build_taps(&paths, &pulse, dims).unwrap().into();
        let (frame, _) = DdFrame::random(dims, &a, rng);
        let s = modulate(&frame, &dft);
        let r = apply_channel(&s, &ch, NoiseModel::noiseless(), rng).unwrap();
        let direct = oracle::direct_io(&s, &paths, &pulse);
        for (x, y) in r.samples().iter().zip(&direct) {
            worst = worst.max((x - y).norm());
        }
    }
    check("block channel vs direct sum", worst < 1e-10, format!("max error {worst:.2e}"))
}

fn fmi_vs_dense(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let m = rng.random_range(8..=32);
        let d = rng.random_range(1..=4);
        let dims = FrameDims::new(m, 2, d).unwrap();
        let ch: BlockChannel = TapTensor::from_fn(dims, |_, _, _| rand_c(rng)).into();
        let samples = (0..dims.samples()).map(|_| rand_c(rng)).collect();
        let r = crate::frame::TimeFrame::from_samples(dims, samples).unwrap();
        let (fast, _) = fmi_soft(&r, &ch, 1.0, 0.1, &mut FlopCounter::default()).unwrap();
        let dense = oracle::dense_lmmse(&r, &ch, 1.0, 0.1);
        let num: f64 = fast.iter().zip(&dense).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = dense.iter().map(|b| b.norm_sqr()).sum();
        worst = worst.max((num / den).sqrt());
    }
    check("FMI vs dense LMMSE", worst < 1e-9, format!("max relative error {worst:.2e}"))
}

fn incremental_sinr(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut worst = 0.0f64;
    let mut monotone = true;
    for _ in 0..50 {
        let d = rng.random_range(0..5);
        let dims = FrameDims::new(16 + d, 3, d).unwrap();
        let ch: BlockChannel = TapTensor::from_fn(dims, |_, _, _| rand_c(rng)).into();
        let noise = rng.random_range(0.01..1.0);
        let mut s = SinrState::init_all(&ch, 1.0, noise, &mut FlopCounter::default());
        let mut eps = vec![false; 16];
        for _ in 0..8 {
            let m = rng.random_range(0..16);
            if eps[m] {
                continue;
            }
            let before = s.clone();
            eps[m] = true;
            s.update_after(m, &mut FlopCounter::default());
            monotone &= (0..3).all(|n| (0..16).all(|k| s.pi(n, k) >= before.pi(n, k)));
        }
        let batch = SinrState::with_indicators(&ch, &eps, 1.0, noise, &mut FlopCounter::default());
        worst = worst.max(s.max_abs_diff(&batch));
    }
    check(
        "incremental SINR vs recomputation",
        worst <= 1e-12 && monotone,
        format!("max difference {worst:.2e}, monotone {monotone}"),
    )
}

fn sinr_monte_carlo(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let dims = FrameDims::new(16, 4, 3).unwrap();
    let ts = 1e-6;
    let pulse = PulseSpec::new(1, 0.25, ts).unwrap();
    let paths = random_paths(rng, 2, 1.9, 2.0, dims, ts);
    let ch: BlockChannel = build_taps(&paths, &pulse, dims).unwrap().into();
    let noise = 0.1;
    let eps = vec![false; 13];
    let a = Alphabet::new(4).unwrap();
    let out = oracle::monte_carlo_sinr(&ch, &[eps.clone()], noise, &a, &Dft::new(4), 20_000, rng);
    let state = SinrState::init_all(&ch, 1.0, noise, &mut FlopCounter::default());
    let mut worst = 0.0f64;
    for n in 0..4 {
        for m in 0..13 {
            let want = state.pi(n, m);
            worst = worst.max((out[0].sinr(n * 13 + m) / want - 1.0).abs());
        }
    }
    check("SINR closed form vs Monte Carlo", worst < 0.1, format!("max relative error {worst:.3}"))
}

fn ml_agreement(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let dims = FrameDims::new(5, 2, 1).unwrap();
    let a = Alphabet::new(4).unwrap();
    let dft = Dft::new(2);
    let trials = 10;
    let mut agree = 0;
    for _ in 0..trials {
        let ch: BlockChannel = TapTensor::from_fn(dims, |_, _, _| crate::channel::complex_normal(rng)).into();
        let (frame, _) = DdFrame::random(dims, &a, rng);
        let r = apply_channel(&modulate(&frame, &dft), &ch, NoiseModel::noiseless(), rng).unwrap();
        let ml = oracle::exhaustive_ml(&r, &ch, &a, &dft);
        let init = init_dsgi(&r, &ch, 1.0, 0.0, &a, &dft, DsgiOptions::default());
        let cfg = DetectorConfig::new(Filter::Lmmse, 10, 1.0, 0.0);
        let run = detect_frame(&r, &ch, &init, &cfg, &a, &dft).unwrap();
        agree += (run.final_decisions() == ml.as_slice()) as usize;
    }
    check("DSGI + SIC-LMMSE vs exhaustive ML", agree == trials, format!("{agree}/{trials} frames agree"))
}

/// Runs every check with a fixed seed.
pub fn run_selftest(seed: u64) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        modulation_roundtrip(&mut rng),
        taps_vs_direct_io(&mut rng),
        fmi_vs_dense(&mut rng),
        incremental_sinr(&mut rng),
        sinr_monte_carlo(&mut rng),
        ml_agreement(&mut rng),
    ]
}
