//! Complex-multiply counters for the complexity scaling checks.
//!
//! One unit is one complex multiply or one squared magnitude. Additions,
//! comparisons and the alphabet search in hard decisions are not counted.

use std::ops::AddAssign;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlopCounter(pub u64);

impl FlopCounter {
    #[inline]
    pub fn add(&mut self, n: usize) {
        self.0 += n as u64;
    }

    pub fn get(&self) -> u64 {
        self.0
    }
}

impl AddAssign for FlopCounter {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

/// Complex multiplies of one radix-2 `n`-point FFT, `(n/2)·log2(n)`; direct
/// summation (`n²`) for other lengths.
pub fn dft_cost(n: usize) -> usize {
    if n <= 1 {
        0
    } else if n.is_power_of_two() {
        n / 2 * n.trailing_zeros() as usize
    } else {
        n * n
    }
}
