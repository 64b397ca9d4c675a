//! Post-cancellation SINR under perfect interference cancellation.
//!
//! For symbol `(n, m)` with window columns `j = 0..D'+D` starting at
//! `m' = max(m − D, 0)`:
//!
//! ```text
//! Π = P_t‖H[:,D']‖² / (Σ_{j≠D'} (1 − ε_{m'+j}) P_t‖H[:,j]‖² + (D+1)σ²)
//! ```
//!
//! Columns whose symbol index is a ZP row are known zeros and never
//! contribute. A zero denominator yields `f64::INFINITY`.

use crate::channel::BlockChannel;
use crate::flops::FlopCounter;
use crate::C64;

/// `‖H_{n,m}[:, c − m']‖²`, the energy of column `c` restricted to rows
/// `m..=m+D`.
fn window_column_norm(channel: &BlockChannel, n: usize, m: usize, c: usize) -> f64 {
    let depth = channel.depth();
    (0..=depth)
        .map(|a| channel.entry(n, m + a, c).norm_sqr())
        .sum()
}

/// Direct evaluation for one symbol from the channel.
pub fn sinr_eval(
    n: usize,
    m: usize,
    channel: &BlockChannel,
    eps: &[bool],
    signal_power: f64,
    noise_variance: f64,
) -> f64 {
    let depth = channel.depth();
    let data_rows = channel.data_rows();
    let first = m.saturating_sub(depth);
    let signal = signal_power * window_column_norm(channel, n, m, m);
    let mut den = (depth + 1) as f64 * noise_variance;
    for c in first..=(m + depth).min(data_rows - 1) {
        if c != m && !eps[c] {
            den += signal_power * window_column_norm(channel, n, m, c);
        }
    }
    ratio(signal, den)
}

#[inline]
fn ratio(signal: f64, den: f64) -> f64 {
    if den > 0.0 {
        signal / den
    } else {
        f64::INFINITY
    }
}

/// Indicators, SINRs, per-index floors and cached column energies.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrState {
    data_rows: usize,
    blocks: usize,
    depth: usize,
    signal_power: f64,
    noise_variance: f64,
    eps: Vec<bool>,
    /// `Π` indexed `n·M' + m`.
    pi: Vec<f64>,
    phi: Vec<f64>,
    /// Column energies indexed `(n·M' + m)(2D+1) + (c + D − m)`.
    norms: Vec<f64>,
}

impl SinrState {
    /// All indicators cleared.
    pub fn init_all(channel: &BlockChannel, signal_power: f64, noise_variance: f64, flops: &mut FlopCounter) -> Self {
        let eps = vec![false; channel.data_rows()];
        Self::with_indicators(channel, &eps, signal_power, noise_variance, flops)
    }

    pub fn with_indicators(
        channel: &BlockChannel,
        eps: &[bool],
        signal_power: f64,
        noise_variance: f64,
        flops: &mut FlopCounter,
    ) -> Self {
        let dims = channel.dims();
        let data_rows = dims.data_rows();
        let depth = dims.zp;
        assert_eq!(eps.len(), data_rows);
        let width = 2 * depth + 1;
        let mut norms = vec![0.0; dims.n * data_rows * width];
        for n in 0..dims.n {
            for m in 0..data_rows {
                let base = (n * data_rows + m) * width;
                for c in m.saturating_sub(depth)..=(m + depth).min(data_rows - 1) {
                    // Each nonzero entry of column c in rows m..=m+D.
                    let rows = (m.max(c)..=(m + depth).min(c + depth)).count();
                    flops.add(rows);
                    norms[base + c + depth - m] = window_column_norm(channel, n, m, c);
                }
            }
        }
        let mut state = SinrState {
            data_rows,
            blocks: dims.n,
            depth,
            signal_power,
            noise_variance,
            eps: eps.to_vec(),
            pi: vec![0.0; dims.n * data_rows],
            phi: vec![0.0; data_rows],
            norms,
        };
        for m in 0..data_rows {
            state.refresh(m, flops);
        }
        state
    }

    fn evaluate(&self, n: usize, m: usize) -> f64 {
        let d = self.depth;
        let base = (n * self.data_rows + m) * (2 * d + 1);
        let signal = self.signal_power * self.norms[base + d];
        let mut den = (d + 1) as f64 * self.noise_variance;
        for c in m.saturating_sub(d)..=(m + d).min(self.data_rows - 1) {
            if c != m && !self.eps[c] {
                den += self.signal_power * self.norms[base + c + d - m];
            }
        }
        ratio(signal, den)
    }

    /// Window columns other than the symbol's own; each is one weighted term
    /// of the denominator.
    fn interferers(&self, m: usize) -> usize {
        (m + self.depth).min(self.data_rows - 1) - m.saturating_sub(self.depth)
    }

    fn refresh(&mut self, m: usize, flops: &mut FlopCounter) {
        let mut floor = f64::INFINITY;
        flops.add(self.blocks * self.interferers(m));
        for n in 0..self.blocks {
            let v = self.evaluate(n, m);
            self.pi[n * self.data_rows + m] = v;
            floor = floor.min(v);
        }
        self.phi[m] = floor;
    }

    /// Sets `ε_{m*} = 1` and refreshes the indices within delay distance `D`.
    pub fn update_after(&mut self, m_star: usize, flops: &mut FlopCounter) {
        self.eps[m_star] = true;
        for m in m_star.saturating_sub(self.depth)..=(m_star + self.depth).min(self.data_rows - 1) {
            if m != m_star {
                self.refresh(m, flops);
            }
        }
    }

    /// Uninitialized index with the largest floor; ties go to the smallest
    /// index and `+∞` outranks every finite value.
    pub fn select(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for m in (0..self.data_rows).filter(|&m| !self.eps[m]) {
            match best {
                Some(b) if self.phi[m] <= self.phi[b] => {}
                _ => best = Some(m),
            }
        }
        best
    }

    pub fn pi(&self, n: usize, m: usize) -> f64 {
        self.pi[n * self.data_rows + m]
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn indicators(&self) -> &[bool] {
        &self.eps
    }

    pub fn data_rows(&self) -> usize {
        self.data_rows
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// Largest absolute difference of `Π` against another state.
    pub fn max_abs_diff(&self, other: &SinrState) -> f64 {
        self.pi
            .iter()
            .zip(&other.pi)
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() })
            .fold(0.0, f64::max)
    }
}

/// Best-case SINR for `(n, m)` with every interferer cancelled.
pub fn sinr_ceiling(channel: &BlockChannel, n: usize, m: usize, signal_power: f64, noise_variance: f64) -> f64 {
    let h: Vec<C64> = channel.center_column(n, m);
    let e: f64 = h.iter().map(|x| x.norm_sqr()).sum();
    ratio(signal_power * e, (channel.depth() + 1) as f64 * noise_variance)
}
