//! QAM alphabets, delay-Doppler frames and the per-index DFT pair.
//!
//! A frame holds `M` delay rows and `N` Doppler columns. The last `D` delay
//! rows are zero padding. Modulation applies an `N`-point IDFT along each
//! delay row and reads the result out block by block, so time sample
//! `k = n·M + m` of the frame is `ẋ[m, n]`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, Error, Result};
use crate::C64;

/// Square Gray-labelled QAM constellation with unit average power.
///
/// Point `p` sits at in-phase level `p / L` and quadrature level `p % L`
/// (`L = √order`). Each axis uses a reflected Gray code; the in-phase bits
/// are the high half of the label.
#[derive(Clone, PartialEq)]
pub struct Alphabet {
    order: usize,
    bits_per_symbol: u32,
    points: Vec<C64>,
    labels: Vec<u32>,
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Alphabet({}-QAM)", self.order)
    }
}

impl Alphabet {
    /// Builds a 4-, 16- or 64-QAM alphabet.
    pub fn new(order: usize) -> Result<Self> {
        let side = match order {
            4 => 2usize,
            16 => 4,
            64 => 8,
            _ => {
                return Err(Error::config(format!(
                    "unsupported alphabet order {order} (expected 4, 16 or 64)"
                )))
            }
        };
        let axis_bits = side.trailing_zeros();
        let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt().recip();
        let level = |i: usize| (2.0 * i as f64 - side as f64 + 1.0) * scale;
        let gray = |i: usize| (i ^ (i >> 1)) as u32;

        let mut points = Vec::with_capacity(order);
        let mut labels = Vec::with_capacity(order);
        for i in 0..side {
            for q in 0..side {
                points.push(C64::new(level(i), level(q)));
                labels.push((gray(i) << axis_bits) | gray(q));
            }
        }
        Ok(Alphabet {
            order,
            bits_per_symbol: 2 * axis_bits,
            points,
            labels,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> C64 {
        self.points[index]
    }

    pub fn label(&self, index: usize) -> u32 {
        self.labels[index]
    }

    /// Number of differing bits between the labels of two points.
    pub fn bit_distance(&self, a: usize, b: usize) -> u32 {
        (self.labels[a] ^ self.labels[b]).count_ones()
    }

    /// Index of the point closest to `x`; ties go to the lowest index.
    pub fn nearest(&self, x: C64) -> usize {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let dist = (p - x).norm_sqr();
            if dist < best_dist {
                best = i;
                best_dist = dist;
            }
        }
        best
    }

    /// Draws a uniformly random point index.
    pub fn random_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.order)
    }
}

/// Output of [`hard_decide`]: chosen point indices, their values and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Decisions {
    pub indices: Vec<usize>,
    pub symbols: Vec<C64>,
    pub bits: Vec<u32>,
}

/// Nearest-point decision for every entry of `soft`.
pub fn hard_decide(soft: &[C64], alphabet: &Alphabet) -> Decisions {
    let indices: Vec<usize> = soft.iter().map(|&x| alphabet.nearest(x)).collect();
    let symbols = indices.iter().map(|&i| alphabet.point(i)).collect();
    let bits = indices.iter().map(|&i| alphabet.label(i)).collect();
    Decisions {
        indices,
        symbols,
        bits,
    }
}

/// Frame dimensions: `m` delay bins, `n` Doppler bins, `zp` padded rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameDims {
    pub m: usize,
    pub n: usize,
    pub zp: usize,
}

impl FrameDims {
    pub fn new(m: usize, n: usize, zp: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("N must be at least 1"));
        }
        if zp >= m {
            return Err(Error::config(format!(
                "zero padding {zp} must be smaller than M = {m}"
            )));
        }
        Ok(FrameDims { m, n, zp })
    }

    /// Number of data rows `M' = M - D`.
    pub fn data_rows(&self) -> usize {
        self.m - self.zp
    }

    pub fn samples(&self) -> usize {
        self.m * self.n
    }

    pub fn data_symbols(&self) -> usize {
        self.data_rows() * self.n
    }
}

/// Delay-Doppler symbol grid, stored row-major as `x[m·N + n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DdFrame {
    dims: FrameDims,
    grid: Vec<C64>,
}

impl DdFrame {
    pub fn zeros(dims: FrameDims) -> Self {
        DdFrame {
            dims,
            grid: vec![C64::new(0.0, 0.0); dims.samples()],
        }
    }

    /// Builds a frame from `M'·N` point indices laid out as `idx[m·N + n]`.
    pub fn from_indices(dims: FrameDims, alphabet: &Alphabet, indices: &[usize]) -> Result<Self> {
        check_len("data symbol indices", dims.data_symbols(), indices.len())?;
        let mut frame = DdFrame::zeros(dims);
        for (slot, &i) in frame.grid.iter_mut().zip(indices) {
            *slot = alphabet.point(i);
        }
        Ok(frame)
    }

    /// Draws uniform random data; returns the frame and its point indices.
    pub fn random<R: Rng + ?Sized>(
        dims: FrameDims,
        alphabet: &Alphabet,
        rng: &mut R,
    ) -> (Self, Vec<usize>) {
        let indices: Vec<usize> = (0..dims.data_symbols())
            .map(|_| alphabet.random_index(rng))
            .collect();
        let frame = DdFrame::from_indices(dims, alphabet, &indices).expect("length matches dims");
        (frame, indices)
    }

    /// Wraps an arbitrary grid; ZP rows must be zero.
    pub fn from_grid(dims: FrameDims, grid: Vec<C64>) -> Result<Self> {
        check_len("delay-Doppler grid", dims.samples(), grid.len())?;
        let start = dims.data_rows() * dims.n;
        if grid[start..].iter().any(|x| *x != C64::new(0.0, 0.0)) {
            return Err(Error::config("zero-padding rows of the grid must be zero"));
        }
        Ok(DdFrame { dims, grid })
    }

    pub fn dims(&self) -> FrameDims {
        self.dims
    }

    pub fn get(&self, m: usize, n: usize) -> C64 {
        self.grid[m * self.dims.n + n]
    }

    pub fn row(&self, m: usize) -> &[C64] {
        &self.grid[m * self.dims.n..(m + 1) * self.dims.n]
    }

    pub fn energy(&self) -> f64 {
        self.grid.iter().map(|x| x.norm_sqr()).sum()
    }
}

/// Time-domain frame. Sample `k` belongs to block `k / M` at index `k % M`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFrame {
    dims: FrameDims,
    samples: Vec<C64>,
}

impl TimeFrame {
    pub fn zeros(dims: FrameDims) -> Self {
        TimeFrame {
            dims,
            samples: vec![C64::new(0.0, 0.0); dims.samples()],
        }
    }

    pub fn from_samples(dims: FrameDims, samples: Vec<C64>) -> Result<Self> {
        check_len("time frame", dims.samples(), samples.len())?;
        Ok(TimeFrame { dims, samples })
    }

    pub fn dims(&self) -> FrameDims {
        self.dims
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [C64] {
        &mut self.samples
    }

    /// `s_{n,m}`.
    pub fn at(&self, n: usize, m: usize) -> C64 {
        self.samples[n * self.dims.m + m]
    }

    pub fn block(&self, n: usize) -> &[C64] {
        &self.samples[n * self.dims.m..(n + 1) * self.dims.m]
    }

    pub fn block_mut(&mut self, n: usize) -> &mut [C64] {
        let m = self.dims.m;
        &mut self.samples[n * m..(n + 1) * m]
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn into_samples(self) -> Vec<C64> {
        self.samples
    }
}

#[derive(Clone)]
enum DftKernel {
    Fast {
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
    },
    Direct {
        twiddles: Vec<C64>,
    },
}

/// Unitary `N`-point DFT pair: [`Dft::to_dd`] is `F_N`, [`Dft::from_dd`] is
/// `F_N^H`.
///
/// Power-of-two lengths go through an FFT; other lengths use direct summation.
#[derive(Clone)]
pub struct Dft {
    len: usize,
    scale: f64,
    kernel: DftKernel,
}

impl fmt::Debug for Dft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kernel {
            DftKernel::Fast { .. } => "fft",
            DftKernel::Direct { .. } => "direct",
        };
        write!(f, "Dft({}, {kind})", self.len)
    }
}

impl Dft {
    pub fn new(len: usize) -> Self {
        if len.is_power_of_two() {
            let mut planner = FftPlanner::new();
            Dft {
                len,
                scale: (len as f64).sqrt().recip(),
                kernel: DftKernel::Fast {
                    forward: planner.plan_fft_forward(len),
                    inverse: planner.plan_fft_inverse(len),
                },
            }
        } else {
            Dft::direct(len)
        }
    }

    /// Direct-summation transform regardless of length.
    pub fn direct(len: usize) -> Self {
        let twiddles = (0..len)
            .map(|k| C64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / len as f64))
            .collect();
        Dft {
            len,
            scale: (len as f64).sqrt().recip(),
            kernel: DftKernel::Direct { twiddles },
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place normalized forward DFT.
    pub fn to_dd(&self, buf: &mut [C64]) {
        self.apply(buf, false);
    }

    /// In-place normalized inverse DFT.
    pub fn from_dd(&self, buf: &mut [C64]) {
        self.apply(buf, true);
    }

    fn apply(&self, buf: &mut [C64], inverse: bool) {
        assert_eq!(buf.len(), self.len, "DFT length mismatch");
        match &self.kernel {
            DftKernel::Fast { forward, inverse: inv } => {
                if inverse {
                    inv.process(buf);
                } else {
                    forward.process(buf);
                }
            }
            DftKernel::Direct { twiddles } => {
                let n = self.len;
                let input = buf.to_vec();
                for (k, out) in buf.iter_mut().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (t, x) in input.iter().enumerate() {
                        let w = twiddles[(k * t) % n];
                        acc += x * if inverse { w.conj() } else { w };
                    }
                    *out = acc;
                }
            }
        }
        for x in buf.iter_mut() {
            *x *= self.scale;
        }
    }
}

/// ODDM modulation: IDFT along each delay row, then block-wise readout.
pub fn modulate(frame: &DdFrame, dft: &Dft) -> TimeFrame {
    let dims = frame.dims();
    assert_eq!(dft.len(), dims.n, "DFT length must equal N");
    let mut time = TimeFrame::zeros(dims);
    let mut row = vec![C64::new(0.0, 0.0); dims.n];
    for m in 0..dims.data_rows() {
        row.copy_from_slice(frame.row(m));
        dft.from_dd(&mut row);
        for (n, &x) in row.iter().enumerate() {
            time.samples[n * dims.m + m] = x;
        }
    }
    time
}

/// Inverse of [`modulate`]: collects each delay index across the blocks and
/// maps it back to the delay-Doppler grid.
pub fn demodulate(time: &TimeFrame, dft: &Dft) -> DdFrame {
    let dims = time.dims();
    let mut grid = vec![C64::new(0.0, 0.0); dims.samples()];
    let mut row = vec![C64::new(0.0, 0.0); dims.n];
    for m in 0..dims.m {
        for (n, slot) in row.iter_mut().enumerate() {
            *slot = time.at(n, m);
        }
        dft.to_dd(&mut row);
        grid[m * dims.n..(m + 1) * dims.n].copy_from_slice(&row);
    }
    DdFrame { dims, grid }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<C64> {
        (0..len)
            .map(|_| {
                C64::new(
                    StandardNormal.sample(&mut *rng),
                    StandardNormal.sample(&mut *rng),
                )
            })
            .collect()
    }

    fn norm(v: &[C64]) -> f64 {
        v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn qpsk_points_and_power() {
        let a = Alphabet::new(4).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for p in a.points() {
            assert!((p.re.abs() - h).abs() < 1e-15 && (p.im.abs() - h).abs() < 1e-15);
        }
        let power: f64 = a.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / 4.0;
        assert!((power - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_average_power_all_orders() {
        for order in [4, 16, 64] {
            let a = Alphabet::new(order).unwrap();
            assert_eq!(a.points().len(), order);
            let power: f64 = a.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
            assert!((power - 1.0).abs() < 1e-12, "order {order}: {power}");
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for order in [4, 16, 64] {
            let a = Alphabet::new(order).unwrap();
            let pts = a.points();
            // Minimum distance between distinct points defines adjacency.
            let dmin = (2.0 * a.point(order - 1).re.abs()) / ((order as f64).sqrt() - 1.0);
            let mut pairs = 0;
            for i in 0..order {
                for j in (i + 1)..order {
                    let d = pts[i] - pts[j];
                    let axis_neighbour = (d.re.abs() < 1e-9 && (d.im.abs() - dmin).abs() < 1e-9)
                        || (d.im.abs() < 1e-9 && (d.re.abs() - dmin).abs() < 1e-9);
                    if axis_neighbour {
                        pairs += 1;
                        assert_eq!(a.bit_distance(i, j), 1, "order {order}: points {i}, {j}");
                    }
                }
            }
            let side = (order as f64).sqrt() as usize;
            assert_eq!(pairs, 2 * side * (side - 1));
        }
    }

    #[test]
    fn labels_are_a_permutation() {
        let a = Alphabet::new(64).unwrap();
        let mut labels: Vec<u32> = (0..64).map(|i| a.label(i)).collect();
        labels.sort_unstable();
        assert_eq!(labels, (0..64).collect::<Vec<u32>>());
    }

    #[test]
    fn unsupported_order_is_config_error() {
        assert!(matches!(Alphabet::new(8), Err(Error::Config(_))));
        assert!(matches!(Alphabet::new(256), Err(Error::Config(_))));
    }

    #[test]
    fn decide_exact_points() {
        let a = Alphabet::new(16).unwrap();
        let d = hard_decide(a.points(), &a);
        assert_eq!(d.indices, (0..16).collect::<Vec<_>>());
        assert_eq!(d.symbols, a.points());
    }

    #[test]
    fn decide_origin_tie_goes_to_lowest_index() {
        let a = Alphabet::new(16).unwrap();
        let d = hard_decide(&[C64::new(0.0, 0.0)], &a);
        let inner: Vec<usize> = (0..16)
            .filter(|&i| a.point(i).re.abs() < 0.5 && a.point(i).im.abs() < 0.5)
            .collect();
        assert_eq!(inner.len(), 4);
        assert_eq!(d.indices[0], inner[0]);
    }

    #[test]
    fn decide_perturbed_points_at_high_snr() {
        let a = Alphabet::new(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let half_gap = a.point(1).im - a.point(0).im;
        for _ in 0..10_000 {
            let i = a.random_index(&mut rng);
            let noise = C64::new(
                rng.random_range(-0.45..0.45) * half_gap,
                rng.random_range(-0.45..0.45) * half_gap,
            );
            let x = a.point(i) + noise;
            // brute-force scan
            let brute = (0..16)
                .min_by(|&p, &q| {
                    (a.point(p) - x)
                        .norm_sqr()
                        .partial_cmp(&(a.point(q) - x).norm_sqr())
                        .unwrap()
                })
                .unwrap();
            assert_eq!(brute, i);
            assert_eq!(a.nearest(x), i);
        }
    }

    #[test]
    fn dft_constant_and_impulse() {
        for len in [4usize, 6, 8] {
            let dft = Dft::new(len);
            let c = C64::new(0.3, -1.1);
            let mut v = vec![c; len];
            dft.to_dd(&mut v);
            let root = (len as f64).sqrt();
            assert!((v[0] - c * root).norm() < 1e-12);
            assert!(v[1..].iter().all(|x| x.norm() < 1e-12));

            let mut d = vec![C64::new(0.0, 0.0); len];
            d[0] = C64::new(1.0, 0.0);
            dft.from_dd(&mut d);
            assert!(d.iter().all(|x| (x - C64::new(1.0 / root, 0.0)).norm() < 1e-12));
        }
    }

    #[test]
    fn dft_round_trip_and_unitarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for len in [1usize, 2, 5, 8, 12, 16] {
            let dft = Dft::new(len);
            let x = random_vec(&mut rng, len);
            let mut y = x.clone();
            dft.to_dd(&mut y);
            assert!((norm(&y) - norm(&x)).abs() < 1e-12);
            dft.from_dd(&mut y);
            assert!(x.iter().zip(&y).all(|(a, b)| (a - b).norm() < 1e-12));

            let mut z = x.clone();
            dft.from_dd(&mut z);
            assert!((norm(&z) - norm(&x)).abs() < 1e-12);
            dft.to_dd(&mut z);
            assert!(x.iter().zip(&z).all(|(a, b)| (a - b).norm() < 1e-12));
        }
    }

    #[test]
    fn fft_matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for len in [2usize, 4, 16, 64] {
            let fast = Dft::new(len);
            let slow = Dft::direct(len);
            let x = random_vec(&mut rng, len);
            let (mut a, mut b) = (x.clone(), x.clone());
            fast.to_dd(&mut a);
            slow.to_dd(&mut b);
            assert!(a.iter().zip(&b).all(|(p, q)| (p - q).norm() < 1e-10));
            fast.from_dd(&mut a);
            slow.from_dd(&mut b);
            assert!(a.iter().zip(&b).all(|(p, q)| (p - q).norm() < 1e-10));
        }
    }

    #[test]
    fn modulate_zero_frame() {
        let dims = FrameDims::new(8, 4, 2).unwrap();
        let s = modulate(&DdFrame::zeros(dims), &Dft::new(4));
        assert!(s.samples().iter().all(|x| *x == C64::new(0.0, 0.0)));
    }

    #[test]
    fn modulate_doppler_impulse_spreads_evenly() {
        let dims = FrameDims::new(8, 4, 2).unwrap();
        let c = C64::new(2.0, -1.0);
        let mut grid = vec![C64::new(0.0, 0.0); dims.samples()];
        grid[3 * 4] = c; // X[3, 0]
        let frame = DdFrame::from_grid(dims, grid).unwrap();
        let s = modulate(&frame, &Dft::new(4));
        for n in 0..4 {
            assert!((s.at(n, 3) - c / 2.0).norm() < 1e-14);
        }
    }

    #[test]
    fn modulate_energy_and_index_identity() {
        let dims = FrameDims::new(16, 8, 3).unwrap();
        let a = Alphabet::new(16).unwrap();
        let dft = Dft::new(8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (frame, _) = DdFrame::random(dims, &a, &mut rng);
        let s = modulate(&frame, &dft);
        assert!((s.energy() - frame.energy()).abs() / frame.energy() < 1e-10);

        // s[M + 2] = ẋ[2, 1]
        let mut row = frame.row(2).to_vec();
        dft.from_dd(&mut row);
        assert!((s.samples()[16 + 2] - row[1]).norm() < 1e-14);
    }

    #[test]
    fn zp_rows_stay_zero_in_time_domain() {
        let dims = FrameDims::new(12, 4, 4).unwrap();
        let a = Alphabet::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (frame, _) = DdFrame::random(dims, &a, &mut rng);
        let s = modulate(&frame, &Dft::new(4));
        for n in 0..4 {
            assert!(s.block(n)[8..].iter().all(|x| *x == C64::new(0.0, 0.0)));
        }
    }

    #[test]
    fn identity_round_trip_recovers_symbols() {
        let dims = FrameDims::new(10, 6, 2).unwrap();
        let a = Alphabet::new(64).unwrap();
        let dft = Dft::new(6);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (frame, idx) = DdFrame::random(dims, &a, &mut rng);
        let back = demodulate(&modulate(&frame, &dft), &dft);
        let soft: Vec<C64> = (0..dims.data_rows())
            .flat_map(|m| back.row(m).to_vec())
            .collect();
        assert_eq!(hard_decide(&soft, &a).indices, idx);
    }

    #[test]
    fn nonzero_zp_grid_rejected() {
        let dims = FrameDims::new(4, 2, 1).unwrap();
        let mut grid = vec![C64::new(0.0, 0.0); 8];
        grid[7] = C64::new(1.0, 0.0);
        assert!(DdFrame::from_grid(dims, grid).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn modulation_is_unitary(seed in any::<u64>(), order_sel in 0usize..3, n_sel in 0usize..4) {
                let order = [4, 16, 64][order_sel];
                let n = [1, 3, 4, 8][n_sel];
                let dims = FrameDims::new(12, n, 3).unwrap();
                let a = Alphabet::new(order).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let (frame, _) = DdFrame::random(dims, &a, &mut rng);
                let s = modulate(&frame, &Dft::new(n));
                prop_assert!((s.energy() - frame.energy()).abs() <= 1e-10 * frame.energy());
            }
        }
    }
}
