//! Monte Carlo BER experiments: configuration, parallel frame simulation,
//! CSV output, operation-count scaling and oracle self-checks.
//!
//! Every frame draws its channel, data, unit noise and CSI error from its
//! own stream keyed by `(seed, frame index)`. The same draws are reused for
//! every SNR point and every detector/initializer pair, and per-frame counts
//! are summed as integers, so output does not depend on the worker count.

pub mod config;
pub mod flops;
pub mod report;
pub mod run;
pub mod selftest;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

pub use config::{SimConfig, PRESETS};
pub use flops::{count_flops, FlopRatio, FlopReport, FlopSample};
pub use report::{build_record, write_csv, Iterations, ResultRow, RunRecord, CSV_HEADER};
pub use run::{run_all, run_point, simulate_frame, ComboStats, PointStats};
pub use selftest::{run_selftest, CheckOutcome};

use crate::error::Result;

/// Runs every SNR point and returns the rows selected by `which`.
pub fn run_sweep(cfg: &SimConfig, which: Iterations, timing: bool) -> Result<RunRecord> {
    let points = run_all(cfg, timing)?;
    Ok(build_record(cfg, &points, which))
}

/// [`run_sweep`] followed by writing the CSV to `path`.
pub fn run_sweep_to(cfg: &SimConfig, which: Iterations, timing: bool, path: &Path) -> Result<RunRecord> {
    let record = run_sweep(cfg, which, timing)?;
    let file = BufWriter::new(File::create(path)?);
    write_csv(&record.rows, file)?;
    Ok(record)
}
