//! Link-level simulation of zero-padded ODDM (orthogonal delay-Doppler
//! division multiplexing) over off-grid doubly dispersive channels.
//!
//! The crate is organised bottom-up:
//!
//! - [`frame`]: QAM alphabets, delay-Doppler grids, the per-index DFT pair and
//!   hard decisions.
//! - [`pulse`]: the truncated raised-cosine autocorrelation of the
//!   root-Nyquist subpulse.
//! - [`channel`]: TDL path generation, the discrete tap tensor, banded block
//!   channels, noisy channel application and CSI perturbation.
//! - [`equalize`]: the iterative SIC-MRC / SIC-LMMSE detector.
//! - [`sinr`]: post-cancellation SINR bookkeeping for the SINR-guided
//!   initializer.
//! - [`init`]: AZI, FMI and DSGI initialization strategies.
//! - [`harness`]: Monte Carlo BER experiments, flop reports and CSV output.
//! - [`oracle`]: slow, independent reference computations used by the test
//!   suites and the `selftest` command.

pub mod band;
pub mod channel;
pub mod equalize;
pub mod error;
pub mod flops;
pub mod frame;
pub mod harness;
pub mod init;
pub mod oracle;
pub mod pulse;
pub mod sinr;

pub use error::{Error, Result};

/// Complex sample type used throughout the crate.
pub type C64 = num_complex::Complex64;
