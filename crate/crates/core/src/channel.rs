//! Doubly dispersive channel: physical paths, the discrete tap tensor and the
//! banded per-block channel matrices.
//!
//! Tap `h[n, m, d]` scales `s_{n, m-d}` into `r_{n, m}`. Row `i` of the block
//! matrix `H_n` therefore holds `h[n, i, i-j]` at column `j` for
//! `0 ≤ i - j ≤ D`, and nothing else. Zero padding makes the `N` blocks
//! independent.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::frame::{FrameDims, TimeFrame};
use crate::pulse::PulseSpec;
use crate::C64;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const TDL_B_CSV: &str = include_str!("../data/tdl-b.csv");

/// Maximum Doppler shift `f_c·v/c` for a speed in km/h.
pub fn max_doppler_hz(carrier_hz: f64, speed_kmh: f64) -> f64 {
    carrier_hz * (speed_kmh / 3.6) / SPEED_OF_LIGHT
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Tapped-delay-line power-delay profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdlProfile {
    /// `(normalized delay, relative power in dB)` pairs.
    pub taps: Vec<(f64, f64)>,
}

impl TdlProfile {
    /// The TDL-B table shipped in `data/tdl-b.csv`.
    pub fn tdl_b() -> Self {
        let taps = TDL_B_CSV
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("normalized"))
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let (d, p) = l.split_once(',').expect("two columns");
                (d.trim().parse().unwrap(), p.trim().parse().unwrap())
            })
            .collect();
        TdlProfile { taps }
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(Error::config("TDL profile has no taps"));
        }
        if self
            .taps
            .iter()
            .any(|&(d, p)| !(d >= 0.0 && d.is_finite() && p.is_finite()))
        {
            return Err(Error::config(
                "TDL profile delays must be finite and non-negative",
            ));
        }
        Ok(())
    }

    /// Linear tap powers normalized to unit sum.
    pub fn normalized_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self.taps.iter().map(|&(_, p)| 10f64.powf(p / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }

    pub fn max_normalized_delay(&self) -> f64 {
        self.taps.iter().map(|t| t.0).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: C64,
    /// Delay in seconds.
    pub delay: f64,
    /// Doppler shift in Hz.
    pub doppler: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<Path>,
}

impl PathSet {
    pub fn single(gain: C64, delay: f64, doppler: f64) -> Self {
        PathSet {
            paths: vec![Path {
                gain,
                delay,
                doppler,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.gain.norm_sqr()).sum()
    }

    /// Normalized delay `l_p = τ_p / T_s`.
    pub fn delay_samples(path: &Path, sample_period: f64) -> f64 {
        path.delay / sample_period
    }

    /// Normalized Doppler `k_p = ν_p·M·N·T_s`.
    pub fn doppler_bins(path: &Path, dims: FrameDims, sample_period: f64) -> f64 {
        path.doppler * (dims.m * dims.n) as f64 * sample_period
    }
}

/// Path statistics: TDL profile scaled by a delay spread, with Jakes-style
/// Doppler `ν_max·cos θ`.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    profile: TdlProfile,
    powers: Vec<f64>,
    delay_spread: f64,
    max_doppler: f64,
}

impl ChannelModel {
    /// Validates the statistics against the tap budget `zp` of the frame:
    /// every path must satisfy `⌈l_p⌉ + 2Q − 1 ≤ D`.
    pub fn new(
        profile: TdlProfile,
        delay_spread: f64,
        max_doppler: f64,
        pulse: &PulseSpec,
        zp: usize,
    ) -> Result<Self> {
        profile.validate()?;
        if !(delay_spread > 0.0 && delay_spread.is_finite()) {
            return Err(Error::config("delay spread must be positive"));
        }
        if !(max_doppler >= 0.0 && max_doppler.is_finite()) {
            return Err(Error::config("maximum Doppler must be non-negative"));
        }
        let l_max = profile.max_normalized_delay() * delay_spread / pulse.sample_period;
        let reach = pulse.max_tap(l_max);
        if reach > zp {
            return Err(Error::config(format!(
                "delay spread not covered by zero padding: largest path delay {l_max:.3} \
                 samples with Q = {} reaches tap {reach} > D = {zp}",
                pulse.q
            )));
        }
        let powers = profile.normalized_powers();
        Ok(ChannelModel {
            profile,
            powers,
            delay_spread,
            max_doppler,
        })
    }

    pub fn max_doppler(&self) -> f64 {
        self.max_doppler
    }

    /// Per-tap average powers (unit sum).
    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// Draws one realization: Rayleigh gains, fixed delays, random Doppler.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> PathSet {
        let paths = self
            .profile
            .taps
            .iter()
            .zip(&self.powers)
            .map(|(&(norm_delay, _), &power)| {
                let gain = complex_normal(rng) * power.sqrt();
                let theta = rng.random_range(0.0..2.0 * PI);
                Path {
                    gain,
                    delay: norm_delay * self.delay_spread,
                    doppler: self.max_doppler * theta.cos(),
                }
            })
            .collect();
        PathSet { paths }
    }
}

/// Discrete channel coefficients `h[n, m, d]` for `d ∈ 0..=D`.
#[derive(Debug, Clone, PartialEq)]
pub struct TapTensor {
    dims: FrameDims,
    taps: Vec<C64>,
}

impl TapTensor {
    pub fn zeros(dims: FrameDims) -> Self {
        TapTensor {
            dims,
            taps: vec![C64::new(0.0, 0.0); dims.samples() * (dims.zp + 1)],
        }
    }

    /// Fills every in-band entry (`d ≤ m`) from `f(n, m, d)`.
    pub fn from_fn(dims: FrameDims, mut f: impl FnMut(usize, usize, usize) -> C64) -> Self {
        let mut t = TapTensor::zeros(dims);
        for n in 0..dims.n {
            for m in 0..dims.m {
                for d in 0..=dims.zp.min(m) {
                    *t.get_mut(n, m, d) = f(n, m, d);
                }
            }
        }
        t
    }

    /// Unit single tap at `d = 0`.
    pub fn identity(dims: FrameDims) -> Self {
        TapTensor::from_fn(dims, |_, _, d| {
            if d == 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn dims(&self) -> FrameDims {
        self.dims
    }

    /// Band depth `D`.
    pub fn depth(&self) -> usize {
        self.dims.zp
    }

    #[inline]
    fn offset(&self, n: usize, m: usize, d: usize) -> usize {
        (n * self.dims.m + m) * (self.dims.zp + 1) + d
    }

    /// `h[n, m, d]`; zero for `d > D` or `d > m`.
    #[inline]
    pub fn get(&self, n: usize, m: usize, d: usize) -> C64 {
        if d > self.dims.zp || d > m {
            C64::new(0.0, 0.0)
        } else {
            self.taps[self.offset(n, m, d)]
        }
    }

    #[inline]
    pub fn get_mut(&mut self, n: usize, m: usize, d: usize) -> &mut C64 {
        let o = self.offset(n, m, d);
        &mut self.taps[o]
    }
}

/// Evaluates `h[n, m, d] = Σ_p ρ_p g((d − l_p)T_s) e^{j2π k_p (m − l_p)/(MN)}
/// e^{j2π n k_p / N}` for every in-band entry.
pub fn build_taps(paths: &PathSet, pulse: &PulseSpec, dims: FrameDims) -> Result<TapTensor> {
    let ts = pulse.sample_period;
    for (i, p) in paths.paths.iter().enumerate() {
        if !(p.delay >= 0.0) {
            return Err(Error::config(format!("path {i} has negative delay")));
        }
        let l = PathSet::delay_samples(p, ts);
        let reach = pulse.max_tap(l);
        if reach > dims.zp {
            return Err(Error::config(format!(
                "path {i} (delay {l:.3} samples) reaches tap {reach}, beyond D = {}",
                dims.zp
            )));
        }
    }

    let mn = (dims.m * dims.n) as f64;
    let mut taps = TapTensor::zeros(dims);
    for p in &paths.paths {
        let l = PathSet::delay_samples(p, ts);
        let k = PathSet::doppler_bins(p, dims, ts);
        let (d_lo, d_hi) = pulse.tap_window(l);
        let d_hi = d_hi.min(dims.zp);
        let weights: Vec<f64> = (d_lo..=d_hi)
            .map(|d| pulse.g_samples(d as f64 - l))
            .collect();
        for n in 0..dims.n {
            let block_phase = 2.0 * PI * n as f64 * k / dims.n as f64;
            for m in 0..dims.m {
                let phase = 2.0 * PI * k * (m as f64 - l) / mn + block_phase;
                let rot = p.gain * C64::from_polar(1.0, phase);
                for (d, &w) in (d_lo..=d_hi.min(m)).zip(&weights) {
                    if w != 0.0 {
                        *taps.get_mut(n, m, d) += rot * w;
                    }
                }
            }
        }
    }
    Ok(taps)
}

/// Banded block channels `H_n`, stored as the tap tensor itself.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockChannel {
    taps: TapTensor,
}

impl From<TapTensor> for BlockChannel {
    fn from(taps: TapTensor) -> Self {
        BlockChannel { taps }
    }
}

impl BlockChannel {
    pub fn identity(dims: FrameDims) -> Self {
        TapTensor::identity(dims).into()
    }

    pub fn taps(&self) -> &TapTensor {
        &self.taps
    }

    pub fn dims(&self) -> FrameDims {
        self.taps.dims
    }

    pub fn depth(&self) -> usize {
        self.taps.dims.zp
    }

    pub fn data_rows(&self) -> usize {
        self.taps.dims.data_rows()
    }

    /// Dense entry `H_n[i][j]`.
    #[inline]
    pub fn entry(&self, n: usize, i: usize, j: usize) -> C64 {
        if j > i {
            return C64::new(0.0, 0.0);
        }
        self.taps.get(n, i, i - j)
    }

    /// Column `h_{n,m} = [h[n, m, 0], h[n, m+1, 1], …, h[n, m+D, D]]`.
    pub fn center_column(&self, n: usize, m: usize) -> Vec<C64> {
        (0..=self.depth())
            .map(|a| {
                if m + a < self.dims().m {
                    self.taps.get(n, m + a, a)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect()
    }

    /// Writes `H_n s_n` into `out` (both length `M`).
    pub fn apply_block(&self, n: usize, s: &[C64], out: &mut [C64]) {
        let dims = self.dims();
        for (i, slot) in out.iter_mut().enumerate().take(dims.m) {
            let mut acc = C64::new(0.0, 0.0);
            for d in 0..=dims.zp.min(i) {
                acc += self.taps.get(n, i, d) * s[i - d];
            }
            *slot = acc;
        }
    }
}

/// White complex Gaussian noise of variance `σ_w²` per sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub variance: f64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel { variance: 0.0 }
    }

    /// `σ_w² = P_t / SNR`.
    pub fn from_snr_db(signal_power: f64, snr_db: f64) -> Self {
        NoiseModel {
            variance: signal_power / 10f64.powf(snr_db / 10.0),
        }
    }

    pub fn snr(&self, signal_power: f64) -> f64 {
        signal_power / self.variance
    }
}

/// Per-block banded convolution plus noise.
pub fn apply_channel<R: Rng + ?Sized>(
    s: &TimeFrame,
    channel: &BlockChannel,
    noise: NoiseModel,
    rng: &mut R,
) -> Result<TimeFrame> {
    let dims = channel.dims();
    check_len("channel input", dims.samples(), s.samples().len())?;
    check_len("channel block length", dims.m, s.dims().m)?;
    let mut r = TimeFrame::zeros(dims);
    for n in 0..dims.n {
        channel.apply_block(n, s.block(n), r.block_mut(n));
    }
    if noise.variance > 0.0 {
        let sigma = noise.variance.sqrt();
        for x in r.samples_mut() {
            *x += complex_normal(rng) * sigma;
        }
    }
    Ok(r)
}

/// Adds complex Gaussian error to the path gains, rescaled so that
/// `Σ|ρ̂ − ρ|² / Σ|ρ|²` equals the target exactly. `None` (or −∞ dB) returns
/// the paths unchanged.
pub fn perturb_csi<R: Rng + ?Sized>(paths: &PathSet, nmse_db: Option<f64>, rng: &mut R) -> PathSet {
    let nmse_db = match nmse_db {
        Some(v) if v.is_finite() => v,
        _ => return paths.clone(),
    };
    let target = 10f64.powf(nmse_db / 10.0);
    let errors: Vec<C64> = paths.paths.iter().map(|_| complex_normal(rng)).collect();
    let err_power: f64 = errors.iter().map(|e| e.norm_sqr()).sum();
    if err_power == 0.0 {
        return paths.clone();
    }
    let scale = (target * paths.total_power() / err_power).sqrt();
    PathSet {
        paths: paths
            .paths
            .iter()
            .zip(&errors)
            .map(|(p, e)| Path {
                gain: p.gain + e * scale,
                ..*p
            })
            .collect(),
    }
}

/// NMSE of an estimate against the true path gains.
pub fn path_nmse(truth: &PathSet, estimate: &PathSet) -> f64 {
    let err: f64 = truth
        .paths
        .iter()
        .zip(&estimate.paths)
        .map(|(a, b)| (a.gain - b.gain).norm_sqr())
        .sum();
    err / truth.total_power()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{modulate, Alphabet, DdFrame, Dft};
    use crate::oracle;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TS: f64 = 1e-6;

    fn pulse(q: usize) -> PulseSpec {
        PulseSpec::new(q, 0.25, TS).unwrap()
    }

    fn random_paths(rng: &mut ChaCha8Rng, count: usize, max_l: f64, max_k: f64, dims: FrameDims) -> PathSet {
        let nu_scale = 1.0 / ((dims.m * dims.n) as f64 * TS);
        PathSet {
            paths: (0..count)
                .map(|_| Path {
                    gain: complex_normal(rng),
                    delay: rng.random_range(0.0..max_l) * TS,
                    doppler: rng.random_range(-max_k..max_k) * nu_scale,
                })
                .collect(),
        }
    }

    #[test]
    fn table_max_doppler() {
        let nu = max_doppler_hz(4e9, 1000.0);
        assert!((nu - 3706.3).abs() < 1.0, "{nu}");
    }

    #[test]
    fn tdl_b_table_loads() {
        let p = TdlProfile::tdl_b();
        assert_eq!(p.taps.len(), 23);
        assert!((p.max_normalized_delay() - 4.7834).abs() < 1e-12);
        let s: f64 = p.normalized_powers().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn drawn_paths_have_unit_average_power_and_tdl_ratios() {
        let pulse = pulse(2);
        let model = ChannelModel::new(TdlProfile::tdl_b(), 0.3e-6, 3700.0, &pulse, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let draws = 10_000;
        let taps = model.powers().len();
        let mut per_tap = vec![0.0; taps];
        let mut total = 0.0;
        for _ in 0..draws {
            let ps = model.draw(&mut rng);
            total += ps.total_power();
            for (acc, p) in per_tap.iter_mut().zip(&ps.paths) {
                *acc += p.gain.norm_sqr();
                assert!(p.doppler.abs() <= 3700.0);
                assert!(p.delay >= 0.0);
            }
        }
        assert!((total / draws as f64 - 1.0).abs() < 0.03);
        // Ratios relative to the strongest tap, which has the smallest
        // relative sampling error.
        let strongest = (0..taps)
            .max_by(|&a, &b| model.powers()[a].partial_cmp(&model.powers()[b]).unwrap())
            .unwrap();
        let ratio_ref = per_tap[strongest];
        for i in 0..taps {
            let measured = per_tap[i] / ratio_ref;
            let expected = model.powers()[i] / model.powers()[strongest];
            // 10^4 exponential draws: ~1% standard error per tap.
            assert!(
                (measured / expected - 1.0).abs() < 0.05,
                "tap {i}: {measured} vs {expected}"
            );
        }
    }

    #[test]
    fn zp_coverage_checked() {
        let pulse = pulse(2);
        // 4.7834 * 1 µs = 4.78 samples → reaches tap 5 + 3 = 8.
        assert!(ChannelModel::new(TdlProfile::tdl_b(), 1e-6, 100.0, &pulse, 8).is_ok());
        assert!(ChannelModel::new(TdlProfile::tdl_b(), 1e-6, 100.0, &pulse, 7).is_err());
        assert!(ChannelModel::new(TdlProfile::tdl_b(), 0.0, 100.0, &pulse, 7).is_err());
    }

    #[test]
    fn single_path_integer_delay_gives_single_tap() {
        let dims = FrameDims::new(32, 4, 8).unwrap();
        let p = pulse(2);
        let t = build_taps(&PathSet::single(C64::new(1.0, 0.0), 0.0, 0.0), &p, dims).unwrap();
        for n in 0..4 {
            for m in 0..32 {
                for d in 0..=8 {
                    let expect = if d == 0 { 1.0 } else { 0.0 };
                    assert!((t.get(n, m, d) - C64::new(expect, 0.0)).norm() < 1e-6);
                }
            }
        }
        let t2 = build_taps(&PathSet::single(C64::new(1.0, 0.0), 2.0 * TS, 0.0), &p, dims).unwrap();
        for m in 2..32 {
            for d in 0..=8 {
                let expect = if d == 2 { 1.0 } else { 0.0 };
                assert!((t2.get(1, m, d) - C64::new(expect, 0.0)).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn taps_match_scalar_formula() {
        let dims = FrameDims::new(32, 4, 8).unwrap();
        let p = pulse(2);
        let nu = 0.3 / ((32 * 4) as f64 * TS);
        let paths = PathSet::single(C64::new(0.7, -0.2), 1.5 * TS, nu);
        let t = build_taps(&paths, &p, dims).unwrap();
        for n in 0..4 {
            for m in 0..32 {
                for d in 0..=8.min(m) {
                    let want = oracle::tap_coefficient(&paths, &p, dims, n, m, d);
                    assert!((t.get(n, m, d) - want).norm() < 1e-12, "n {n} m {m} d {d}");
                }
            }
        }
    }

    #[test]
    fn out_of_budget_path_is_named() {
        let dims = FrameDims::new(32, 4, 4).unwrap();
        let mut paths = PathSet::single(C64::new(1.0, 0.0), 0.0, 0.0);
        paths.paths.push(Path {
            gain: C64::new(0.5, 0.0),
            delay: 2.5 * TS,
            doppler: 0.0,
        });
        let err = build_taps(&paths, &pulse(2), dims).unwrap_err();
        assert!(err.to_string().contains("path 1"), "{err}");
    }

    #[test]
    fn band_structure_holds() {
        let dims = FrameDims::new(16, 3, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let paths = random_paths(&mut rng, 3, 2.0, 3.0, dims);
        let ch: BlockChannel = build_taps(&paths, &pulse(1), dims).unwrap().into();
        for n in 0..3 {
            for i in 0..16 {
                for j in 0..16 {
                    let v = ch.entry(n, i, j);
                    if v != C64::new(0.0, 0.0) {
                        assert!(i >= j && i - j <= 5);
                        assert_eq!(v, ch.taps().get(n, i, i - j));
                    }
                }
            }
        }
    }

    #[test]
    fn single_path_doppler_is_phase_only_across_blocks() {
        let dims = FrameDims::new(16, 8, 6).unwrap();
        let nu = 1.7 / ((16 * 8) as f64 * TS);
        let paths = PathSet::single(C64::new(0.3, 0.9), 1.25 * TS, nu);
        let t = build_taps(&paths, &pulse(1), dims).unwrap();
        for n in 1..8 {
            for m in 0..16 {
                for d in 0..=6.min(m) {
                    let base = t.get(0, m, d);
                    if base.norm() > 1e-12 {
                        assert!(((t.get(n, m, d) / base).norm() - 1.0).abs() < 1e-12);
                    }
                    if m >= 6 {
                        assert!((t.get(n, m, d).norm() - t.get(0, 6, d).norm()).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn identity_channel_noiseless_is_transparent() {
        let dims = FrameDims::new(8, 4, 2).unwrap();
        let a = Alphabet::new(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (frame, _) = DdFrame::random(dims, &a, &mut rng);
        let s = modulate(&frame, &Dft::new(4));
        let r = apply_channel(&s, &BlockChannel::identity(dims), NoiseModel::noiseless(), &mut rng).unwrap();
        assert_eq!(r, s);
    }

    #[test]
    fn block_form_matches_direct_io_sum() {
        let dims = FrameDims::new(24, 4, 6).unwrap();
        let a = Alphabet::new(16).unwrap();
        let p = pulse(1);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let paths = random_paths(&mut rng, 3, 4.0, 2.5, dims);
            let (frame, _) = DdFrame::random(dims, &a, &mut rng);
            let s = modulate(&frame, &Dft::new(4));
            let ch: BlockChannel = build_taps(&paths, &p, dims).unwrap().into();
            let r = apply_channel(&s, &ch, NoiseModel::noiseless(), &mut rng).unwrap();
            let direct = oracle::direct_io(&s, &paths, &p);
            for (x, y) in r.samples().iter().zip(&direct) {
                assert!((x - y).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn blocks_are_isolated() {
        let dims = FrameDims::new(16, 4, 4).unwrap();
        let a = Alphabet::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let paths = random_paths(&mut rng, 2, 2.0, 1.0, dims);
        let ch: BlockChannel = build_taps(&paths, &pulse(1), dims).unwrap().into();
        let (frame, _) = DdFrame::random(dims, &a, &mut rng);
        let s = modulate(&frame, &Dft::new(4));
        let r = apply_channel(&s, &ch, NoiseModel::noiseless(), &mut rng).unwrap();
        let mut s2 = s.clone();
        for x in s2.block_mut(2)[..12].iter_mut() {
            *x += C64::new(3.0, -1.0);
        }
        let r2 = apply_channel(&s2, &ch, NoiseModel::noiseless(), &mut rng).unwrap();
        for n in [0, 1, 3] {
            assert_eq!(r.block(n), r2.block(n));
        }
        assert_ne!(r.block(2), r2.block(2));
    }

    #[test]
    fn noise_power_matches_variance() {
        let dims = FrameDims::new(16, 4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = TimeFrame::zeros(dims);
        let ch = BlockChannel::identity(dims);
        let noise = NoiseModel { variance: 0.1 };
        let trials = 10_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            acc += apply_channel(&s, &ch, noise, &mut rng).unwrap().energy();
        }
        let per_sample = acc / (trials * dims.samples()) as f64;
        assert!((per_sample / 0.1 - 1.0).abs() < 0.03, "{per_sample}");
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let dims = FrameDims::new(16, 4, 2).unwrap();
        let other = FrameDims::new(8, 4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let res = apply_channel(&TimeFrame::zeros(other), &BlockChannel::identity(dims), NoiseModel::noiseless(), &mut rng);
        assert!(matches!(res, Err(Error::Dimension { .. })));
    }

    #[test]
    fn csi_perturbation_hits_target_exactly() {
        let dims = FrameDims::new(16, 4, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let paths = random_paths(&mut rng, 6, 2.0, 1.0, dims);
        assert_eq!(perturb_csi(&paths, None, &mut rng), paths);
        assert_eq!(perturb_csi(&paths, Some(f64::NEG_INFINITY), &mut rng), paths);
        for (db, lin) in [(-10.0, 0.1), (-20.0, 0.01)] {
            let est = perturb_csi(&paths, Some(db), &mut rng);
            assert!((path_nmse(&paths, &est) - lin).abs() < 1e-12);
            for (a, b) in paths.paths.iter().zip(&est.paths) {
                assert_eq!(a.delay, b.delay);
                assert_eq!(a.doppler, b.doppler);
            }
        }
    }
}
