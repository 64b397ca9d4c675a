//! Root-Nyquist subpulse and its autocorrelation.
//!
//! The subpulse `a(t)` is a root raised cosine, so its autocorrelation
//! `g(τ) = a(τ) ∗ a*(−τ)` is a raised cosine. `g` is truncated to
//! `|τ| < 2QT_s`; the truncation keeps the zero crossings at every nonzero
//! multiple of `T_s`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SINGULARITY_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Half duration of the subpulse in samples (`T_a = 2QT_s`).
    pub q: usize,
    pub rolloff: f64,
    /// Sampling period `T_s` in seconds.
    pub sample_period: f64,
    /// Points per sample used by numerical checks of the autocorrelation.
    #[serde(default = "default_oversampling")]
    pub oversampling: usize,
}

fn default_oversampling() -> usize {
    64
}

impl PulseSpec {
    pub fn new(q: usize, rolloff: f64, sample_period: f64) -> Result<Self> {
        let spec = PulseSpec {
            q,
            rolloff,
            sample_period,
            oversampling: default_oversampling(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::config("pulse Q must be a positive integer"));
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(Error::config(format!(
                "rolloff {} outside [0, 1]",
                self.rolloff
            )));
        }
        if !(self.sample_period > 0.0 && self.sample_period.is_finite()) {
            return Err(Error::config("sample period must be positive"));
        }
        Ok(())
    }

    /// Enforces `2Q ≤ M/4` for a frame with `m` delay bins.
    pub fn check_frame(&self, m: usize) -> Result<()> {
        if 8 * self.q > m {
            return Err(Error::config(format!(
                "pulse too long: 2Q = {} exceeds M/4 = {}",
                2 * self.q,
                m as f64 / 4.0
            )));
        }
        Ok(())
    }

    /// `g(τ)` with `τ` in seconds.
    pub fn g_eval(&self, tau: f64) -> f64 {
        self.g_samples(tau / self.sample_period)
    }

    /// `g(x·T_s)`, i.e. the autocorrelation at an offset in samples.
    pub fn g_samples(&self, x: f64) -> f64 {
        let x = x.abs();
        if x >= 2.0 * self.q as f64 {
            return 0.0;
        }
        raised_cosine(self.rolloff, x)
    }

    /// Integer tap range `[d_min, d_max]` where `g((d − l)T_s)` can be
    /// nonzero, clipped to `d ≥ 0`.
    pub fn tap_window(&self, delay_samples: f64) -> (usize, usize) {
        let span = 2.0 * self.q as f64;
        let lo = (delay_samples - span).floor() + 1.0;
        let hi = (delay_samples + span).ceil() - 1.0;
        (lo.max(0.0) as usize, hi.max(0.0) as usize)
    }

    /// Largest tap index any path with delay `delay_samples` can reach.
    pub fn max_tap(&self, delay_samples: f64) -> usize {
        self.tap_window(delay_samples).1
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Raised-cosine impulse response at `x` samples (unit symbol period).
pub fn raised_cosine(rolloff: f64, x: f64) -> f64 {
    if rolloff == 0.0 {
        return sinc(x);
    }
    let singular = 1.0 / (2.0 * rolloff);
    if (x.abs() - singular).abs() < SINGULARITY_GUARD {
        return PI / 4.0 * sinc(singular);
    }
    let b = 2.0 * rolloff * x;
    sinc(x) * (PI * rolloff * x).cos() / (1.0 - b * b)
}

/// Unit-energy root-raised-cosine pulse at `x` samples (unit symbol period).
pub fn root_raised_cosine(rolloff: f64, x: f64) -> f64 {
    let b = rolloff;
    if x == 0.0 {
        return 1.0 - b + 4.0 * b / PI;
    }
    if b > 0.0 && (x.abs() - 1.0 / (4.0 * b)).abs() < SINGULARITY_GUARD {
        let arg = PI / (4.0 * b);
        return b / 2f64.sqrt() * ((1.0 + 2.0 / PI) * arg.sin() + (1.0 - 2.0 / PI) * arg.cos());
    }
    let num = (PI * x * (1.0 - b)).sin() + 4.0 * b * x * (PI * x * (1.0 + b)).cos();
    let den = PI * x * (1.0 - (4.0 * b * x).powi(2));
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(q: usize, beta: f64) -> PulseSpec {
        PulseSpec::new(q, beta, 1e-6).unwrap()
    }

    /// Riemann sum of `a(t)a(t − x)` on a fine grid over a wide span.
    fn numerical_autocorrelation(beta: f64, x: f64, oversampling: usize) -> f64 {
        let span = 48.0;
        let dt = 1.0 / oversampling as f64;
        let steps = (2.0 * span / dt) as i64;
        (0..=steps)
            .map(|i| {
                let t = -span + i as f64 * dt;
                root_raised_cosine(beta, t) * root_raised_cosine(beta, t - x)
            })
            .sum::<f64>()
            * dt
    }

    #[test]
    fn unit_peak() {
        for beta in [0.0, 0.25, 0.5, 1.0] {
            assert_eq!(spec(4, beta).g_eval(0.0), 1.0);
        }
    }

    #[test]
    fn nyquist_zeros() {
        let s = spec(4, 0.25);
        assert!(s.g_eval(3.0 * 1e-6).abs() < 1e-6);
        for beta in [0.0, 0.1, 0.25, 0.5, 1.0] {
            let s = spec(4, beta);
            for d in 1..8 {
                assert!(s.g_samples(d as f64).abs() <= 1e-6, "beta {beta} d {d}");
                assert!(s.g_samples(-(d as f64)).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn matches_numerical_autocorrelation_of_root_pulse() {
        let s = spec(4, 0.25);
        let oracle = numerical_autocorrelation(0.25, 0.5, s.oversampling);
        assert!((s.g_samples(0.5) - oracle).abs() < 1e-4, "{} vs {oracle}", s.g_samples(0.5));
        let peak = numerical_autocorrelation(0.25, 0.0, s.oversampling);
        assert!((peak - 1.0).abs() < 1e-4);
        for x in [0.25, 1.3, 2.7] {
            let o = numerical_autocorrelation(0.25, x, s.oversampling);
            assert!((s.g_samples(x) - o).abs() < 1e-4, "x {x}");
        }
    }

    #[test]
    fn support_and_evenness() {
        let s = spec(3, 0.3);
        assert_eq!(s.g_samples(6.0), 0.0);
        assert_eq!(s.g_samples(-6.5), 0.0);
        for i in 0..600 {
            let x = i as f64 * 0.01;
            assert_eq!(s.g_samples(x), s.g_samples(-x));
        }
    }

    #[test]
    fn singular_rolloff_point_is_continuous() {
        let beta = 0.25;
        let x0 = 1.0 / (2.0 * beta);
        let at = raised_cosine(beta, x0);
        for eps in [1e-4, 1e-6, 1e-7] {
            assert!((raised_cosine(beta, x0 + eps) - at).abs() < 10.0 * eps);
            assert!((raised_cosine(beta, x0 - eps) - at).abs() < 10.0 * eps);
        }
        let r0 = 1.0 / (4.0 * beta);
        let ra = root_raised_cosine(beta, r0);
        assert!((root_raised_cosine(beta, r0 + 1e-6) - ra).abs() < 1e-5);
    }

    #[test]
    fn finite_differences_are_bounded() {
        let s = spec(4, 0.25);
        let h = 1e-3;
        let mut x = -8.0;
        while x < 8.0 {
            let slope = (s.g_samples(x + h) - s.g_samples(x)) / h;
            assert!(slope.abs() < 5.0, "slope {slope} at {x}");
            x += h;
        }
    }

    #[test]
    fn tap_windows() {
        let s = spec(4, 0.25);
        let (lo, hi) = s.tap_window(5.0);
        assert!(lo <= 5 && 5 <= hi);
        assert_eq!((lo, hi), (0, 12));
        assert_eq!(s.tap_window(0.0).0, 0);
        assert_eq!(s.tap_window(2.5), (0, 10));

        let s2 = spec(2, 0.25);
        assert_eq!(s2.tap_window(10.5), (7, 14));
    }

    #[test]
    fn tap_window_covers_every_nonnegligible_tap() {
        for (q, l) in [(4usize, 2.5f64), (2, 7.3), (3, 0.4), (1, 3.9)] {
            let s = spec(q, 0.25);
            let (lo, hi) = s.tap_window(l);
            for d in 0..40usize {
                let v = s.g_samples(d as f64 - l).abs();
                if v > 1e-9 {
                    assert!(lo <= d && d <= hi, "q {q} l {l} d {d}");
                }
                if d < lo || d > hi {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn frame_length_constraint() {
        let s = spec(4, 0.25);
        assert!(s.check_frame(32).is_ok());
        assert!(s.check_frame(31).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(PulseSpec::new(0, 0.25, 1e-6).is_err());
        assert!(PulseSpec::new(2, 1.5, 1e-6).is_err());
        assert!(PulseSpec::new(2, 0.25, 0.0).is_err());
    }
}
