//! Iterative SIC detection with MRC or LMMSE combining.
//!
//! Each iteration sweeps the data delay indices in ascending order. At index
//! `m` every block is filtered after hard interference cancellation, then the
//! `N` estimates are mapped to the delay-Doppler domain, sliced, and mapped
//! back before moving to `m + 1`. Lower indices therefore cancel with
//! current-iteration decisions and upper indices with previous-iteration
//! decisions.
//!
//! The detector keeps the residual `r − H s̄` per block, so the cancelled
//! window of a symbol is `residual[m..=m+D] + h_{n,m} s̄_{n,m}` and an
//! estimate change touches only `D + 1` residual entries. [`cancel`] is the
//! window-level form operating on an explicit [`SymbolWindow`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::BlockChannel;
use crate::error::{check_len, Error, Result};
use crate::flops::{dft_cost, FlopCounter};
use crate::frame::{Alphabet, Dft, FrameDims, TimeFrame};
use crate::init::InitResult;
use crate::C64;

/// Channel energy below which a window is treated as degenerate.
pub const DEGENERATE_ENERGY: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Filter {
    #[serde(rename = "sic-mrc")]
    Mrc,
    #[serde(rename = "sic-lmmse")]
    Lmmse,
}

impl Filter {
    pub fn name(&self) -> &'static str {
        match self {
            Filter::Mrc => "sic-mrc",
            Filter::Lmmse => "sic-lmmse",
        }
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Filter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sic-mrc" | "mrc" => Ok(Filter::Mrc),
            "sic-lmmse" | "lmmse" => Ok(Filter::Lmmse),
            other => Err(Error::config(format!("unknown detector '{other}'"))),
        }
    }
}

/// Receive window of symbol `s_{n,m}`: rows `m..=m+D` of `H_n`, columns
/// `m'..=m+D` with `m' = max(m − D, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolWindow {
    pub n: usize,
    pub m: usize,
    /// `m'`, the first column index.
    pub first: usize,
    /// `D' = min(m, D)`, the position of the symbol's own column.
    pub center: usize,
    pub depth: usize,
    /// `r̄_{n,m}`, `D + 1` samples.
    pub received: Vec<C64>,
    /// `H_{n,m}` row-major, `(D + 1) × (D' + D + 1)`.
    pub sub_channel: Vec<C64>,
}

impl SymbolWindow {
    pub fn extract(channel: &BlockChannel, r: &TimeFrame, n: usize, m: usize) -> Self {
        let depth = channel.depth();
        let first = m.saturating_sub(depth);
        let center = m.min(depth);
        let cols = center + depth + 1;
        let mut sub_channel = Vec::with_capacity((depth + 1) * cols);
        for a in 0..=depth {
            for j in 0..cols {
                sub_channel.push(channel.entry(n, m + a, first + j));
            }
        }
        SymbolWindow {
            n,
            m,
            first,
            center,
            depth,
            received: r.block(n)[m..=m + depth].to_vec(),
            sub_channel,
        }
    }

    pub fn columns(&self) -> usize {
        self.center + self.depth + 1
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        let cols = self.columns();
        (0..=self.depth).map(|a| self.sub_channel[a * cols + j]).collect()
    }

    /// `h_{n,m}`, the column acting on the symbol itself.
    pub fn center_column(&self) -> Vec<C64> {
        self.column(self.center)
    }

    pub fn column_norm_sqr(&self, j: usize) -> f64 {
        self.column(j).iter().map(|x| x.norm_sqr()).sum()
    }
}

/// Hard cancellation: `r̄ − Σ_{j ≠ D'} H[:, j] s̄_{m'+j}`.
///
/// `estimates` is the block's time-domain estimate vector (length `M`),
/// holding current-iteration values below `m` and previous-iteration values
/// above it.
pub fn cancel(window: &SymbolWindow, estimates: &[C64]) -> Vec<C64> {
    let cols = window.columns();
    let mut out = window.received.clone();
    for (a, slot) in out.iter_mut().enumerate() {
        for j in (0..cols).filter(|&j| j != window.center) {
            let idx = window.first + j;
            if idx < estimates.len() {
                *slot -= window.sub_channel[a * cols + j] * estimates[idx];
            }
        }
    }
    out
}

/// Combining with a zero-energy window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegenerateChannel;

/// `hᴴ r̃ / ‖h‖²`.
pub fn filter_mrc(h: &[C64], residual: &[C64]) -> std::result::Result<C64, DegenerateChannel> {
    let energy: f64 = h.iter().map(|x| x.norm_sqr()).sum();
    if energy < DEGENERATE_ENERGY {
        return Err(DegenerateChannel);
    }
    Ok(inner(h, residual) / energy)
}

/// `hᴴ r̃ / (P_t ‖h‖² + σ_w²)`.
pub fn filter_lmmse(h: &[C64], residual: &[C64], signal_power: f64, noise_variance: f64) -> C64 {
    let energy: f64 = h.iter().map(|x| x.norm_sqr()).sum();
    inner(h, residual) / (signal_power * energy + noise_variance)
}

#[inline]
fn inner(h: &[C64], x: &[C64]) -> C64 {
    h.iter().zip(x).map(|(a, b)| a.conj() * b).sum()
}

/// Combines one window given its precomputed energy; `None` when degenerate.
#[inline]
pub(crate) fn combine(
    filter: Filter,
    correlation: C64,
    energy: f64,
    signal_power: f64,
    noise_variance: f64,
) -> Option<C64> {
    match filter {
        Filter::Mrc if energy < DEGENERATE_ENERGY => None,
        Filter::Mrc => Some(correlation / energy),
        Filter::Lmmse => {
            let den = signal_power * energy + noise_variance;
            if den > 0.0 {
                Some(correlation / den)
            } else {
                None
            }
        }
    }
}

/// Slices one delay index: `soft` holds `ŝ_{·,m}` on entry and
/// `F_Nᴴ x̂_m` on exit. Returns the decided point indices.
pub fn decide_index(soft: &mut [C64], alphabet: &Alphabet, dft: &Dft, flops: &mut FlopCounter) -> Vec<usize> {
    dft.to_dd(soft);
    let indices: Vec<usize> = soft.iter().map(|&x| alphabet.nearest(x)).collect();
    for (slot, &i) in soft.iter_mut().zip(&indices) {
        *slot = alphabet.point(i);
    }
    dft.from_dd(soft);
    flops.add(2 * dft_cost(dft.len()));
    indices
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub filter: Filter,
    pub max_iters: usize,
    pub signal_power: f64,
    pub noise_variance: f64,
    /// Stop once an iteration reproduces the previous decisions.
    pub stop_at_fixed_point: bool,
}

impl DetectorConfig {
    pub fn new(filter: Filter, max_iters: usize, signal_power: f64, noise_variance: f64) -> Self {
        DetectorConfig {
            filter,
            max_iters,
            signal_power,
            noise_variance,
            stop_at_fixed_point: true,
        }
    }
}

/// Single-writer detection state for one frame.
#[derive(Debug, Clone)]
pub struct DetectorState {
    dims: FrameDims,
    /// `s̄`, time-domain hard estimates.
    estimates: TimeFrame,
    /// `r − H s̄` per block.
    residual: Vec<C64>,
    /// `‖h_{n,m}‖²` indexed `n·M' + m`.
    energies: Vec<f64>,
    /// Current decisions indexed `m·N + n`, if any exist.
    decisions: Option<Vec<usize>>,
    degenerate: usize,
}

pub(crate) fn residual_of(
    r: &TimeFrame,
    channel: &BlockChannel,
    estimates: &TimeFrame,
    flops: &mut FlopCounter,
) -> Vec<C64> {
    let dims = channel.dims();
    let mut residual = r.samples().to_vec();
    if estimates.samples().iter().any(|x| *x != C64::new(0.0, 0.0)) {
        let mut hs = vec![C64::new(0.0, 0.0); dims.m];
        for n in 0..dims.n {
            channel.apply_block(n, estimates.block(n), &mut hs);
            for (slot, v) in residual[n * dims.m..(n + 1) * dims.m].iter_mut().zip(&hs) {
                *slot -= v;
            }
        }
        flops.add(dims.data_symbols() * (dims.zp + 1));
    }
    residual
}

impl DetectorState {
    pub fn new(
        r: &TimeFrame,
        channel: &BlockChannel,
        initial: &TimeFrame,
        decisions: Option<Vec<usize>>,
        flops: &mut FlopCounter,
    ) -> Result<Self> {
        let dims = channel.dims();
        check_len("received frame", dims.samples(), r.samples().len())?;
        check_len("initial estimates", dims.samples(), initial.samples().len())?;
        if let Some(d) = &decisions {
            check_len("initial decisions", dims.data_symbols(), d.len())?;
        }
        let data_rows = dims.data_rows();
        for n in 0..dims.n {
            if initial.block(n)[data_rows..]
                .iter()
                .any(|x| *x != C64::new(0.0, 0.0))
            {
                return Err(Error::config("initial estimates must be zero on ZP rows"));
            }
        }
        let residual = residual_of(r, channel, initial, flops);
        let mut energies = Vec::with_capacity(dims.data_symbols());
        for n in 0..dims.n {
            for m in 0..data_rows {
                let e = (0..=dims.zp)
                    .map(|a| channel.taps().get(n, m + a, a).norm_sqr())
                    .sum();
                energies.push(e);
            }
        }
        flops.add(dims.data_symbols() * (dims.zp + 1));
        Ok(DetectorState {
            dims,
            estimates: initial.clone(),
            residual,
            energies,
            decisions,
            degenerate: 0,
        })
    }

    pub fn estimates(&self) -> &TimeFrame {
        &self.estimates
    }

    pub fn decisions(&self) -> Option<&[usize]> {
        self.decisions.as_deref()
    }

    pub fn degenerate_windows(&self) -> usize {
        self.degenerate
    }

    /// Cancelled window `r̃_{n,m}` from the tracked residual.
    pub fn residual_window(&self, channel: &BlockChannel, n: usize, m: usize) -> Vec<C64> {
        let base = n * self.dims.m;
        let s = self.estimates.at(n, m);
        (0..=self.dims.zp)
            .map(|a| self.residual[base + m + a] + channel.taps().get(n, m + a, a) * s)
            .collect()
    }

    /// One ascending sweep over the data indices.
    pub fn sweep(
        &mut self,
        channel: &BlockChannel,
        config: &DetectorConfig,
        alphabet: &Alphabet,
        dft: &Dft,
        flops: &mut FlopCounter,
    ) -> Vec<usize> {
        let dims = self.dims;
        let data_rows = dims.data_rows();
        let depth = dims.zp;
        let mut decisions = vec![0usize; dims.data_symbols()];
        let mut soft = vec![C64::new(0.0, 0.0); dims.n];
        for m in 0..data_rows {
            for (n, slot) in soft.iter_mut().enumerate() {
                *slot = self.estimate(channel, n, m, config.filter, config.signal_power, config.noise_variance, flops);
            }
            let idx = decide_index(&mut soft, alphabet, dft, flops);
            decisions[m * dims.n..(m + 1) * dims.n].copy_from_slice(&idx);
            for (n, &s_new) in soft.iter().enumerate() {
                self.replace_estimate(channel, n, m, s_new);
            }
            flops.add(dims.n * (depth + 1));
        }
        self.decisions = Some(decisions.clone());
        decisions
    }

    /// Filtered estimate of `s_{n,m}` from the cancelled window; zero when
    /// the window is degenerate.
    pub(crate) fn estimate(
        &mut self,
        channel: &BlockChannel,
        n: usize,
        m: usize,
        filter: Filter,
        signal_power: f64,
        noise_variance: f64,
        flops: &mut FlopCounter,
    ) -> C64 {
        let base = n * self.dims.m;
        let s_old = self.estimates.at(n, m);
        let mut corr = C64::new(0.0, 0.0);
        for a in 0..=self.dims.zp {
            let h = channel.taps().get(n, m + a, a);
            corr += h.conj() * (self.residual[base + m + a] + h * s_old);
        }
        flops.add(2 * (self.dims.zp + 1));
        let energy = self.energies[n * self.dims.data_rows() + m];
        match combine(filter, corr, energy, signal_power, noise_variance) {
            Some(v) => v,
            None => {
                self.degenerate += 1;
                C64::new(0.0, 0.0)
            }
        }
    }

    /// Sets `s̄_{n,m}` and updates the residual rows it touches.
    pub(crate) fn replace_estimate(&mut self, channel: &BlockChannel, n: usize, m: usize, value: C64) {
        let base = n * self.dims.m;
        let delta = value - self.estimates.at(n, m);
        if delta != C64::new(0.0, 0.0) {
            for a in 0..=self.dims.zp {
                self.residual[base + m + a] -= channel.taps().get(n, m + a, a) * delta;
            }
        }
        self.estimates.block_mut(n)[m] = value;
    }
}

/// Decisions and cost of one detector iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Point indices laid out `m·N + n`.
    pub decisions: Vec<usize>,
    /// Detection flops accumulated up to and including this iteration.
    pub flops: u64,
}

#[derive(Debug, Clone)]
pub struct DetectorRun {
    pub iterations: Vec<IterationRecord>,
    /// Iteration (1-based) whose decisions equalled the previous ones.
    pub converged_at: Option<usize>,
    pub degenerate_windows: usize,
    pub flops: FlopCounter,
    pub final_estimates: TimeFrame,
}

impl DetectorRun {
    /// Decisions after iteration `i` (1-based), repeating the fixed point
    /// once the detector has converged.
    pub fn decisions_at(&self, i: usize) -> Option<&[usize]> {
        if i == 0 || self.iterations.is_empty() {
            return None;
        }
        let idx = (i - 1).min(self.iterations.len() - 1);
        Some(&self.iterations[idx].decisions)
    }

    pub fn final_decisions(&self) -> &[usize] {
        &self.iterations.last().expect("at least one iteration").decisions
    }
}

/// Runs the iterative detector from an initializer's output.
pub fn detect_frame(
    r: &TimeFrame,
    channel: &BlockChannel,
    init: &InitResult,
    config: &DetectorConfig,
    alphabet: &Alphabet,
    dft: &Dft,
) -> Result<DetectorRun> {
    if config.max_iters == 0 {
        return Err(Error::config("max_iters must be at least 1"));
    }
    check_len("DFT length", channel.dims().n, dft.len())?;
    let mut flops = FlopCounter::default();
    let mut state = DetectorState::new(r, channel, &init.estimates, init.decisions.clone(), &mut flops)?;
    let mut iterations = Vec::with_capacity(config.max_iters);
    let mut converged_at = None;
    for i in 1..=config.max_iters {
        let previous = state.decisions.clone();
        let decisions = state.sweep(channel, config, alphabet, dft, &mut flops);
        let fixed = previous.as_deref() == Some(decisions.as_slice());
        iterations.push(IterationRecord {
            decisions,
            flops: flops.get(),
        });
        if fixed {
            converged_at = Some(i);
            if config.stop_at_fixed_point {
                break;
            }
        }
    }
    Ok(DetectorRun {
        iterations,
        converged_at,
        degenerate_windows: state.degenerate,
        flops,
        final_estimates: state.estimates,
    })
}
