//! Slow reference implementations used to check the fast paths.
//!
//! Everything here works from first principles: physical path parameters,
//! dense matrices, exhaustive search or Monte Carlo averages. The test
//! suites and the `selftest` command compare the production code against
//! these.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::channel::{complex_normal, BlockChannel, PathSet};
use crate::frame::{modulate, Alphabet, DdFrame, Dft, FrameDims, TimeFrame};
use crate::pulse::PulseSpec;
use crate::C64;

/// Tap `h[n, m, d]` straight from the sampled matched-filter output:
/// `Σ_p ρ_p g(dT_s − τ_p) e^{j2πν_p(kT_s − τ_p)}` with `k = nM + m`.
pub fn tap_coefficient(paths: &PathSet, pulse: &PulseSpec, dims: FrameDims, n: usize, m: usize, d: usize) -> C64 {
    let ts = pulse.sample_period;
    let k = (n * dims.m + m) as f64;
    paths
        .paths
        .iter()
        .map(|p| {
            let g = pulse.g_eval(d as f64 * ts - p.delay);
            p.gain * g * C64::from_polar(1.0, 2.0 * PI * p.doppler * (k * ts - p.delay))
        })
        .sum()
}

/// Noiseless received samples from the circular double sum over taps
/// `0..=D` and paths.
pub fn direct_io(s: &TimeFrame, paths: &PathSet, pulse: &PulseSpec) -> Vec<C64> {
    let dims = s.dims();
    let total = dims.samples();
    let x = s.samples();
    (0..total)
        .map(|k| {
            (0..=dims.zp)
                .map(|d| {
                    let n = k / dims.m;
                    let m = k % dims.m;
                    tap_coefficient(paths, pulse, dims, n, m, d) * x[(k + total - d) % total]
                })
                .sum()
        })
        .collect()
}

/// Dense `H_n` assembled entry by entry.
pub fn dense_block(channel: &BlockChannel, n: usize) -> DMatrix<C64> {
    let m = channel.dims().m;
    DMatrix::from_fn(m, m, |i, j| channel.entry(n, i, j))
}

/// Rows `m..=m+D` of `r_n − H_n s'` where `s'` is `estimates` with entry
/// `m` zeroed.
pub fn dense_cancel(channel: &BlockChannel, r: &TimeFrame, n: usize, m: usize, estimates: &[C64]) -> Vec<C64> {
    let h = dense_block(channel, n);
    let mut s = DVector::from_column_slice(estimates);
    s[m] = C64::new(0.0, 0.0);
    let y = DVector::from_column_slice(r.block(n)) - h * s;
    y.as_slice()[m..=m + channel.depth()].to_vec()
}

/// `(H̃ᴴH̃ + (σ²/P)I)⁻¹ H̃ᴴ r_n` per block by dense LU, laid out `n·M' + m`.
pub fn dense_lmmse(r: &TimeFrame, channel: &BlockChannel, signal_power: f64, noise_variance: f64) -> Vec<C64> {
    let dims = channel.dims();
    let size = dims.data_rows();
    let mut out = Vec::with_capacity(dims.n * size);
    for n in 0..dims.n {
        let h = dense_block(channel, n).columns(0, size).into_owned();
        let hh = h.adjoint();
        let a = &hh * &h + DMatrix::<C64>::identity(size, size) * C64::new(noise_variance / signal_power, 0.0);
        let b = &hh * DVector::from_column_slice(r.block(n));
        let x = a.lu().solve(&b).expect("regularized normal matrix is invertible");
        out.extend(x.iter().copied());
    }
    out
}

/// Maximum-likelihood DD decisions by exhaustive search over every frame.
///
/// Only feasible for tiny frames: the search visits `order^(M'N)`
/// candidates. Ties go to the first candidate in lexicographic order.
pub fn exhaustive_ml(r: &TimeFrame, channel: &BlockChannel, alphabet: &Alphabet, dft: &Dft) -> Vec<usize> {
    let dims = channel.dims();
    let count = dims.data_symbols();
    let order = alphabet.order();
    let total = (order as u64).checked_pow(count as u32).expect("search space fits in u64");
    assert!(total <= 1 << 24, "exhaustive search too large");
    let mut indices = vec![0usize; count];
    let mut best = (f64::INFINITY, indices.clone());
    let mut hs = vec![C64::new(0.0, 0.0); dims.m];
    for code in 0..total {
        let mut c = code;
        for slot in indices.iter_mut().rev() {
            *slot = (c % order as u64) as usize;
            c /= order as u64;
        }
        let frame = DdFrame::from_indices(dims, alphabet, &indices).expect("valid indices");
        let s = modulate(&frame, dft);
        let mut metric = 0.0;
        for n in 0..dims.n {
            channel.apply_block(n, s.block(n), &mut hs);
            metric += r.block(n).iter().zip(&hs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
        }
        if metric < best.0 {
            best = (metric, indices.clone());
        }
    }
    best.1
}

/// Sample averages collected by [`monte_carlo_sinr`] for one indicator
/// pattern, indexed `n·M' + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrMeasurement {
    pub draws: usize,
    /// Mean `‖φ‖²`.
    pub signal: Vec<f64>,
    /// Mean `‖ẑ‖²`.
    pub interference: Vec<f64>,
    /// Mean of the `i = j` terms of `ẑᴴẑ`, noise included.
    pub diagonal: Vec<f64>,
    /// Mean of the `i ≠ j` terms of `ẑᴴẑ`, interference–noise products
    /// included.
    pub cross: Vec<f64>,
}

impl SinrMeasurement {
    pub fn sinr(&self, index: usize) -> f64 {
        self.signal[index] / self.interference[index]
    }
}

/// Empirical SINR under perfect cancellation.
///
/// Each draw modulates a fresh random DD frame and noise realization. For
/// every symbol the signal part is `H[:,D'] s_{n,m}` and the
/// interference-plus-noise part sums the uncancelled columns (with the true
/// symbols) plus the window noise.
pub fn monte_carlo_sinr<R: Rng + ?Sized>(
    channel: &BlockChannel,
    patterns: &[Vec<bool>],
    noise_variance: f64,
    alphabet: &Alphabet,
    dft: &Dft,
    draws: usize,
    rng: &mut R,
) -> Vec<SinrMeasurement> {
    let dims = channel.dims();
    let size = dims.data_rows();
    let depth = dims.zp;
    let cells = dims.n * size;
    let mut acc: Vec<SinrMeasurement> = patterns
        .iter()
        .map(|_| SinrMeasurement {
            draws,
            signal: vec![0.0; cells],
            interference: vec![0.0; cells],
            diagonal: vec![0.0; cells],
            cross: vec![0.0; cells],
        })
        .collect();
    let sigma = noise_variance.sqrt();
    let mut parts = vec![C64::new(0.0, 0.0); (2 * depth + 1) * (depth + 1)];
    let mut zhat = vec![C64::new(0.0, 0.0); depth + 1];
    for _ in 0..draws {
        let (frame, _) = DdFrame::random(dims, alphabet, rng);
        let s = modulate(&frame, dft);
        let noise: Vec<C64> = (0..dims.samples()).map(|_| complex_normal(rng) * sigma).collect();
        for n in 0..dims.n {
            for m in 0..size {
                let lo = m.saturating_sub(depth);
                let hi = (m + depth).min(size - 1);
                let z = &noise[n * dims.m + m..=n * dims.m + m + depth];
                let noise_energy: f64 = z.iter().map(|x| x.norm_sqr()).sum();
                for c in lo..=hi {
                    let sc = s.at(n, c);
                    for a in 0..=depth {
                        parts[(c - lo) * (depth + 1) + a] = channel.entry(n, m + a, c) * sc;
                    }
                }
                let energy = |c: usize| -> f64 {
                    parts[(c - lo) * (depth + 1)..(c - lo + 1) * (depth + 1)]
                        .iter()
                        .map(|x| x.norm_sqr())
                        .sum()
                };
                let signal = energy(m);
                let cell = n * size + m;
                for (pattern, out) in patterns.iter().zip(acc.iter_mut()) {
                    zhat.copy_from_slice(z);
                    let mut diag = noise_energy;
                    for c in (lo..=hi).filter(|&c| c != m && !pattern[c]) {
                        for a in 0..=depth {
                            zhat[a] += parts[(c - lo) * (depth + 1) + a];
                        }
                        diag += energy(c);
                    }
                    let total: f64 = zhat.iter().map(|x| x.norm_sqr()).sum();
                    out.signal[cell] += signal;
                    out.interference[cell] += total;
                    out.diagonal[cell] += diag;
                    out.cross[cell] += total - diag;
                }
            }
        }
    }
    let scale = 1.0 / draws as f64;
    for out in &mut acc {
        for v in out
            .signal
            .iter_mut()
            .chain(out.interference.iter_mut())
            .chain(out.diagonal.iter_mut())
            .chain(out.cross.iter_mut())
        {
            *v *= scale;
        }
    }
    acc
}
