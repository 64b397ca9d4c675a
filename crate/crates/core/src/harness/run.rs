use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{build_taps, complex_normal, perturb_csi, BlockChannel, NoiseModel};
use crate::equalize::{detect_frame, DetectorConfig, Filter};
use crate::error::Result;
use crate::frame::{modulate, Alphabet, DdFrame, Dft, TimeFrame};
use crate::init::{initialize, Initializer};
use crate::C64;

use super::config::SimConfig;

/// Independent stream for one frame.
pub fn frame_rng(seed: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng
}

/// Aggregated counts for one (SNR, detector, initializer).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComboStats {
    /// Bit errors after iteration `i`; index 0 holds the initializer's own
    /// decisions.
    pub bit_errors: Vec<u64>,
    pub flops_init: u64,
    /// Cumulative detection flops through iteration `i` (index `i − 1`).
    pub flops_detect: Vec<u64>,
    pub nanos: u64,
    pub degenerate_windows: u64,
    pub regularized_frames: u64,
}

impl ComboStats {
    fn new(iters: usize) -> Self {
        ComboStats {
            bit_errors: vec![0; iters + 1],
            flops_detect: vec![0; iters],
            ..Default::default()
        }
    }

    fn merge(&mut self, other: &ComboStats) {
        for (a, b) in self.bit_errors.iter_mut().zip(&other.bit_errors) {
            *a += b;
        }
        for (a, b) in self.flops_detect.iter_mut().zip(&other.flops_detect) {
            *a += b;
        }
        self.flops_init += other.flops_init;
        self.nanos += other.nanos;
        self.degenerate_windows += other.degenerate_windows;
        self.regularized_frames += other.regularized_frames;
    }
}

/// Results for one SNR point, one entry per combo in [`SimConfig::combos`].
#[derive(Debug, Clone, PartialEq)]
pub struct PointStats {
    pub snr_db: f64,
    pub frames: u64,
    pub bits_per_frame: u64,
    pub combos: Vec<((Filter, Initializer), ComboStats)>,
}

fn bit_errors(alphabet: &Alphabet, truth: &[usize], decided: &[usize]) -> u64 {
    truth
        .iter()
        .zip(decided)
        .map(|(&a, &b)| alphabet.bit_distance(a, b) as u64)
        .sum()
}

/// Simulates one frame at every SNR and combo with shared channel, data and
/// noise draws. Returns stats indexed `[snr][combo]`.
pub fn simulate_frame(cfg: &SimConfig, frame: u64, timing: bool) -> Result<Vec<Vec<ComboStats>>> {
    let dims = cfg.dims()?;
    let pulse = cfg.pulse()?;
    let alphabet = cfg.alphabet()?;
    let model = cfg.channel_model()?;
    let dft = Dft::new(dims.n);
    let combos = cfg.combos();
    let mut rng = frame_rng(cfg.seed, frame);

    let paths = model.draw(&mut rng);
    let channel: BlockChannel = build_taps(&paths, &pulse, dims)?.into();
    let (data, truth) = DdFrame::random(dims, &alphabet, &mut rng);
    let mut s = modulate(&data, &dft);
    let amplitude = cfg.signal_power.sqrt();
    for x in s.samples_mut() {
        *x *= amplitude;
    }
    let unit_noise: Vec<C64> = (0..dims.samples()).map(|_| complex_normal(&mut rng)).collect();
    let estimated = perturb_csi(&paths, cfg.nmse_db, &mut rng);
    let csi: BlockChannel = if cfg.nmse_db.is_some_and(|x| x.is_finite()) {
        build_taps(&estimated, &pulse, dims)?.into()
    } else {
        channel.clone()
    };
    let clean = crate::channel::apply_channel(&s, &channel, NoiseModel::noiseless(), &mut rng)?;

    let mut out = Vec::with_capacity(cfg.snr_db.len());
    for &snr_db in &cfg.snr_db {
        let noise = NoiseModel::from_snr_db(cfg.signal_power, snr_db);
        let sigma = noise.variance.sqrt();
        let samples: Vec<C64> = clean
            .samples()
            .iter()
            .zip(&unit_noise)
            .map(|(x, w)| (x + w * sigma) / amplitude)
            .collect();
        // Receiver works on the unit-power alphabet, so the input is scaled
        // back by the amplitude and the noise variance by P_t.
        let r = TimeFrame::from_samples(dims, samples)?;
        let variance = noise.variance / cfg.signal_power;
        let mut per_combo = Vec::with_capacity(combos.len());
        for &(filter, init_kind) in &combos {
            let start = timing.then(Instant::now);
            let mut stats = ComboStats::new(cfg.max_iters);
            let init = initialize(init_kind, &r, &csi, 1.0, variance, &alphabet, &dft, cfg.dsgi)?;
            stats.flops_init = init.flops;
            stats.regularized_frames = init.regularized as u64;
            if let Some(d) = &init.decisions {
                stats.bit_errors[0] = bit_errors(&alphabet, &truth, d);
            }
            let det = DetectorConfig::new(filter, cfg.max_iters, 1.0, variance);
            let run = detect_frame(&r, &csi, &init, &det, &alphabet, &dft)?;
            for i in 1..=cfg.max_iters {
                let k = (i - 1).min(run.iterations.len() - 1);
                stats.bit_errors[i] = bit_errors(&alphabet, &truth, &run.iterations[k].decisions);
                stats.flops_detect[i - 1] = run.iterations[k].flops;
            }
            stats.degenerate_windows = run.degenerate_windows as u64;
            if let Some(t) = start {
                stats.nanos = t.elapsed().as_nanos() as u64;
            }
            per_combo.push(stats);
        }
        out.push(per_combo);
    }
    Ok(out)
}

/// Runs every frame on a pool of `cfg.workers` threads and sums the counts.
pub fn run_all(cfg: &SimConfig, timing: bool) -> Result<Vec<PointStats>> {
    cfg.validate()?;
    if cfg.snr_db.is_empty() {
        return Ok(Vec::new());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| crate::Error::Numerical(format!("thread pool: {e}")))?;
    let frames: Vec<Vec<Vec<ComboStats>>> = pool.install(|| {
        (0..cfg.frames as u64)
            .into_par_iter()
            .map(|f| simulate_frame(cfg, f, timing))
            .collect::<Result<Vec<_>>>()
    })?;
    let combos = cfg.combos();
    let alphabet = cfg.alphabet()?;
    let dims = cfg.dims()?;
    let bits_per_frame = (dims.data_symbols() as u64) * alphabet.bits_per_symbol() as u64;
    Ok(cfg
        .snr_db
        .iter()
        .enumerate()
        .map(|(si, &snr_db)| {
            let stats = combos
                .iter()
                .enumerate()
                .map(|(ci, &combo)| {
                    let mut total = ComboStats::new(cfg.max_iters);
                    for f in &frames {
                        total.merge(&f[si][ci]);
                    }
                    (combo, total)
                })
                .collect();
            PointStats {
                snr_db,
                frames: cfg.frames as u64,
                bits_per_frame,
                combos: stats,
            }
        })
        .collect())
}

/// Runs a single SNR point.
pub fn run_point(cfg: &SimConfig, snr_db: f64, timing: bool) -> Result<PointStats> {
    let mut one = cfg.clone();
    one.snr_db = vec![snr_db];
    Ok(run_all(&one, timing)?.remove(0))
}
