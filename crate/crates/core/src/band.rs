//! Hermitian positive-definite banded systems.
//!
//! Only the lower band is stored: row `i` keeps columns
//! `i - bandwidth ..= i`. Setting `bandwidth = n - 1` gives a dense solver
//! with the same arithmetic, which is how dense-equivalent costs are measured.

use crate::flops::FlopCounter;
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianBand {
    size: usize,
    bandwidth: usize,
    /// `lower[i * (bandwidth + 1) + (j + bandwidth - i)]` holds `A[i][j]`.
    lower: Vec<C64>,
}

/// Factorization failed at the given pivot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotPositiveDefinite {
    pub pivot: usize,
}

impl HermitianBand {
    pub fn zeros(size: usize, bandwidth: usize) -> Self {
        let bandwidth = bandwidth.min(size.saturating_sub(1));
        HermitianBand {
            size,
            bandwidth,
            lower: vec![C64::new(0.0, 0.0); size * (bandwidth + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bandwidth);
        i * (self.bandwidth + 1) + (j + self.bandwidth - i)
    }

    /// `A[i][j]` for `j ≤ i`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> C64 {
        if j > i {
            return self.get(j, i).conj();
        }
        if i - j > self.bandwidth {
            C64::new(0.0, 0.0)
        } else {
            self.lower[self.slot(i, j)]
        }
    }

    /// Sets the lower entry `A[i][j]`, `j ≤ i`.
    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        let s = self.slot(i, j);
        self.lower[s] = value;
    }

    pub fn add_diagonal(&mut self, value: f64) {
        for i in 0..self.size {
            let s = self.slot(i, i);
            self.lower[s] += value;
        }
    }

    /// In-place Cholesky factorization `A = L Lᴴ`.
    pub fn cholesky(mut self, flops: &mut FlopCounter) -> Result<BandCholesky, NotPositiveDefinite> {
        let b = self.bandwidth;
        for j in 0..self.size {
            let k0 = j.saturating_sub(b);
            let mut diag = self.lower[self.slot(j, j)];
            for k in k0..j {
                diag -= self.lower[self.slot(j, k)].norm_sqr();
            }
            flops.add(j - k0);
            if !(diag.re > 0.0) || !diag.re.is_finite() {
                return Err(NotPositiveDefinite { pivot: j });
            }
            let pivot = diag.re.sqrt();
            let sj = self.slot(j, j);
            self.lower[sj] = C64::new(pivot, 0.0);

            for i in (j + 1)..(j + b + 1).min(self.size) {
                let k0 = i.saturating_sub(b);
                let mut acc = self.lower[self.slot(i, j)];
                for k in k0..j {
                    acc -= self.lower[self.slot(i, k)] * self.lower[self.slot(j, k)].conj();
                }
                flops.add(j - k0 + 1);
                let s = self.slot(i, j);
                self.lower[s] = acc / pivot;
            }
        }
        Ok(BandCholesky { factor: self })
    }
}

/// Multiplications performed by [`HermitianBand::cholesky`] on a
/// `size`-dimensional matrix with the given half-bandwidth.
pub fn cholesky_cost(size: usize, bandwidth: usize) -> u64 {
    let b = bandwidth.min(size.saturating_sub(1));
    let mut total = 0u64;
    for j in 0..size {
        total += (j - j.saturating_sub(b)) as u64;
        for i in (j + 1)..(j + b + 1).min(size) {
            total += (j - i.saturating_sub(b) + 1) as u64;
        }
    }
    total
}

/// Multiplications performed by [`BandCholesky::solve`].
pub fn solve_cost(size: usize, bandwidth: usize) -> u64 {
    let b = bandwidth.min(size.saturating_sub(1));
    (0..size)
        .map(|i| 2 * (i - i.saturating_sub(b)) as u64 + 2)
        .sum()
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    factor: HermitianBand,
}

impl BandCholesky {
    /// Solves `L Lᴴ x = rhs` in place.
    pub fn solve(&self, rhs: &mut [C64], flops: &mut FlopCounter) {
        let l = &self.factor;
        let n = l.size;
        let b = l.bandwidth;
        assert_eq!(rhs.len(), n);
        for i in 0..n {
            let mut acc = rhs[i];
            for k in i.saturating_sub(b)..i {
                acc -= l.lower[l.slot(i, k)] * rhs[k];
            }
            rhs[i] = acc / l.lower[l.slot(i, i)].re;
            flops.add(i - i.saturating_sub(b) + 1);
        }
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            let top = (i + b + 1).min(n);
            for k in (i + 1)..top {
                acc -= l.lower[l.slot(k, i)].conj() * rhs[k];
            }
            rhs[i] = acc / l.lower[l.slot(i, i)].re;
            flops.add(top - i);
        }
    }
}
