//! Detector initializers: all-zero (AZI), full LMMSE (FMI) and
//! SINR-guided (DSGI).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::band::{cholesky_cost, solve_cost, HermitianBand};
use crate::channel::BlockChannel;
use crate::equalize::{decide_index, DetectorState, Filter};
use crate::error::{Error, Result};
use crate::flops::FlopCounter;
use crate::frame::{Alphabet, DdFrame, Dft, FrameDims, TimeFrame};
use crate::sinr::SinrState;
use crate::C64;

/// Diagonal loading applied when the FMI normal matrix is not positive
/// definite.
pub const FMI_FALLBACK_LOADING: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Initializer {
    Azi,
    Fmi,
    Dsgi,
}

impl Initializer {
    pub fn name(&self) -> &'static str {
        match self {
            Initializer::Azi => "azi",
            Initializer::Fmi => "fmi",
            Initializer::Dsgi => "dsgi",
        }
    }

    /// Whether the initializer emits its own decisions.
    pub fn decides(&self) -> bool {
        !matches!(self, Initializer::Azi)
    }
}

impl fmt::Display for Initializer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Initializer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "azi" => Ok(Initializer::Azi),
            "fmi" => Ok(Initializer::Fmi),
            "dsgi" => Ok(Initializer::Dsgi),
            other => Err(Error::config(format!("unknown initializer '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitResult {
    /// `s̄⁽⁰⁾`, zero on ZP rows.
    pub estimates: TimeFrame,
    /// `x̂⁽⁰⁾` as point indices laid out `m·N + n`; `None` for AZI.
    pub decisions: Option<Vec<usize>>,
    /// DSGI selection order.
    pub order: Vec<usize>,
    pub flops: u64,
    /// FMI only: cost of the same solve with dense normal equations.
    pub dense_equivalent_flops: Option<u64>,
    /// FMI fell back to diagonal loading on at least one block.
    pub regularized: bool,
}

impl InitResult {
    /// Wraps known DD decisions as an initialization.
    pub fn from_decisions(dims: FrameDims, decisions: &[usize], alphabet: &Alphabet, dft: &Dft) -> Self {
        let frame = DdFrame::from_indices(dims, alphabet, decisions).expect("decision count matches dims");
        InitResult {
            estimates: crate::frame::modulate(&frame, dft),
            decisions: Some(decisions.to_vec()),
            order: Vec::new(),
            flops: 0,
            dense_equivalent_flops: None,
            regularized: false,
        }
    }
}

pub fn init_azi(dims: FrameDims) -> InitResult {
    InitResult {
        estimates: TimeFrame::zeros(dims),
        decisions: None,
        order: Vec::new(),
        flops: 0,
        dense_equivalent_flops: None,
        regularized: false,
    }
}

/// Normal matrix `H̃ᴴH̃ + λI` and matched output `H̃ᴴr_n` of block `n`,
/// where `H̃` holds the `M'` data columns.
pub(crate) fn normal_equations(
    channel: &BlockChannel,
    r: &TimeFrame,
    n: usize,
    loading: f64,
    flops: &mut FlopCounter,
) -> (HermitianBand, Vec<C64>) {
    let dims = channel.dims();
    let size = dims.data_rows();
    let d = dims.zp;
    let mut a = HermitianBand::zeros(size, d);
    for i in 0..size {
        for j in i.saturating_sub(d)..=i {
            // Rows where columns i and j overlap: i..=j+D.
            let mut acc = C64::new(0.0, 0.0);
            for k in i..=j + d {
                acc += channel.entry(n, k, i).conj() * channel.entry(n, k, j);
            }
            flops.add(j + d + 1 - i);
            a.set(i, j, acc);
        }
    }
    a.add_diagonal(loading);
    let block = r.block(n);
    let rhs = (0..size)
        .map(|i| (i..=i + d).map(|k| channel.entry(n, k, i).conj() * block[k]).sum())
        .collect();
    flops.add(size * (d + 1));
    (a, rhs)
}

/// Cost of FMI with dense normal equations: Gram matrix, matched filter,
/// full-bandwidth Cholesky and solve, for every block.
pub fn fmi_dense_cost(dims: FrameDims) -> u64 {
    let size = dims.data_rows();
    let rows = dims.m as u64;
    let gram = (size * (size + 1) / 2) as u64 * rows;
    let matched = size as u64 * rows;
    let full = size.saturating_sub(1);
    dims.n as u64 * (gram + matched + cholesky_cost(size, full) + solve_cost(size, full))
}

/// Solves every block's regularized normal equations; returns `ŝ` laid out
/// `n·M' + m` and whether any block needed loading.
pub fn fmi_soft(
    r: &TimeFrame,
    channel: &BlockChannel,
    signal_power: f64,
    noise_variance: f64,
    flops: &mut FlopCounter,
) -> Result<(Vec<C64>, bool)> {
    let dims = channel.dims();
    let size = dims.data_rows();
    let loading = noise_variance / signal_power;
    let mut out = Vec::with_capacity(dims.n * size);
    let mut regularized = false;
    for n in 0..dims.n {
        let (a, mut rhs) = normal_equations(channel, r, n, loading, flops);
        let chol = match a.clone().cholesky(flops) {
            Ok(c) => c,
            Err(_) => {
                regularized = true;
                let mut loaded = a;
                loaded.add_diagonal(FMI_FALLBACK_LOADING);
                loaded.cholesky(flops).map_err(|e| {
                    Error::Numerical(format!("FMI normal matrix of block {n} singular at pivot {}", e.pivot))
                })?
            }
        };
        chol.solve(&mut rhs, flops);
        out.extend(rhs);
    }
    Ok((out, regularized))
}

/// Decides every index from soft time-domain estimates laid out `n·M' + m`.
fn decide_all(
    soft: &[C64],
    dims: FrameDims,
    alphabet: &Alphabet,
    dft: &Dft,
    flops: &mut FlopCounter,
) -> (TimeFrame, Vec<usize>) {
    let size = dims.data_rows();
    let mut estimates = TimeFrame::zeros(dims);
    let mut decisions = vec![0; dims.data_symbols()];
    let mut column = vec![C64::new(0.0, 0.0); dims.n];
    for m in 0..size {
        for (n, slot) in column.iter_mut().enumerate() {
            *slot = soft[n * size + m];
        }
        let idx = decide_index(&mut column, alphabet, dft, flops);
        decisions[m * dims.n..(m + 1) * dims.n].copy_from_slice(&idx);
        for (n, v) in column.iter().enumerate() {
            estimates.block_mut(n)[m] = *v;
        }
    }
    (estimates, decisions)
}

pub fn init_fmi(
    r: &TimeFrame,
    channel: &BlockChannel,
    signal_power: f64,
    noise_variance: f64,
    alphabet: &Alphabet,
    dft: &Dft,
) -> Result<InitResult> {
    let dims = channel.dims();
    let mut flops = FlopCounter::default();
    let (soft, regularized) = fmi_soft(r, channel, signal_power, noise_variance, &mut flops)?;
    let solve = flops.get();
    let (estimates, decisions) = decide_all(&soft, dims, alphabet, dft, &mut flops);
    let decide = flops.get() - solve;
    Ok(InitResult {
        estimates,
        decisions: Some(decisions),
        order: Vec::new(),
        flops: flops.get(),
        dense_equivalent_flops: Some(fmi_dense_cost(dims) + decide),
        regularized,
    })
}

/// Flops spent by [`fmi_soft`] when no block needs loading.
pub fn fmi_banded_cost(dims: FrameDims) -> u64 {
    let size = dims.data_rows();
    let d = dims.zp.min(size.saturating_sub(1));
    let mut gram = 0u64;
    for i in 0..size {
        for j in i.saturating_sub(dims.zp)..=i {
            gram += (j + dims.zp + 1 - i) as u64;
        }
    }
    let matched = (size * (dims.zp + 1)) as u64;
    dims.n as u64 * (gram + matched + cholesky_cost(size, d) + solve_cost(size, d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DsgiOptions {
    /// Cancel with soft estimates and decide every index after the loop.
    #[serde(default)]
    pub batch_decisions: bool,
}

pub fn init_dsgi(
    r: &TimeFrame,
    channel: &BlockChannel,
    signal_power: f64,
    noise_variance: f64,
    alphabet: &Alphabet,
    dft: &Dft,
    options: DsgiOptions,
) -> InitResult {
    let dims = channel.dims();
    let size = dims.data_rows();
    let mut flops = FlopCounter::default();
    let mut sinr = SinrState::init_all(channel, signal_power, noise_variance, &mut flops);
    let mut state = DetectorState::new(r, channel, &TimeFrame::zeros(dims), None, &mut flops)
        .expect("dimensions come from the channel");
    let mut decisions = vec![0; dims.data_symbols()];
    let mut order = Vec::with_capacity(size);
    let mut column = vec![C64::new(0.0, 0.0); dims.n];
    while let Some(m) = sinr.select() {
        for (n, slot) in column.iter_mut().enumerate() {
            *slot = state.estimate(channel, n, m, Filter::Lmmse, signal_power, noise_variance, &mut flops);
        }
        if !options.batch_decisions {
            let idx = decide_index(&mut column, alphabet, dft, &mut flops);
            decisions[m * dims.n..(m + 1) * dims.n].copy_from_slice(&idx);
        }
        for (n, &v) in column.iter().enumerate() {
            state.replace_estimate(channel, n, m, v);
        }
        flops.add(dims.n * (dims.zp + 1));
        sinr.update_after(m, &mut flops);
        order.push(m);
    }
    let estimates = if options.batch_decisions {
        let mut soft = vec![C64::new(0.0, 0.0); dims.n * size];
        for n in 0..dims.n {
            soft[n * size..(n + 1) * size].copy_from_slice(&state.estimates().block(n)[..size]);
        }
        let (est, dec) = decide_all(&soft, dims, alphabet, dft, &mut flops);
        decisions = dec;
        est
    } else {
        state.estimates().clone()
    };
    InitResult {
        estimates,
        decisions: Some(decisions),
        order,
        flops: flops.get(),
        dense_equivalent_flops: None,
        regularized: false,
    }
}

/// Dispatches on the initializer kind.
pub fn initialize(
    kind: Initializer,
    r: &TimeFrame,
    channel: &BlockChannel,
    signal_power: f64,
    noise_variance: f64,
    alphabet: &Alphabet,
    dft: &Dft,
    options: DsgiOptions,
) -> Result<InitResult> {
    match kind {
        Initializer::Azi => Ok(init_azi(channel.dims())),
        Initializer::Fmi => init_fmi(r, channel, signal_power, noise_variance, alphabet, dft),
        Initializer::Dsgi => Ok(init_dsgi(r, channel, signal_power, noise_variance, alphabet, dft, options)),
    }
}
