use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

use super::config::SimConfig;
use super::run::PointStats;

pub const CSV_HEADER: [&str; 12] = [
    "snr_db",
    "iteration",
    "detector",
    "initializer",
    "nmse_db",
    "frames",
    "bits",
    "bit_errors",
    "ber",
    "flops_init",
    "flops_detect",
    "seconds",
];

/// One CSV line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub snr_db: f64,
    pub iteration: usize,
    pub detector: String,
    pub initializer: String,
    /// `-inf` for perfect CSI.
    pub nmse_db: f64,
    pub frames: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    /// Mean per frame, rounded down.
    pub flops_init: u64,
    /// Mean per frame through this iteration, rounded down.
    pub flops_detect: u64,
    pub seconds: f64,
}

/// Rows plus run identification.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub rows: Vec<ResultRow>,
}

/// Which iterations appear in the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Iterations {
    /// Every iteration, plus iteration 0 for initializers that decide.
    All,
    /// Only the last iteration.
    Final,
}

pub fn config_hash(cfg: &SimConfig) -> String {
    let digest = Sha256::digest(cfg.to_toml().as_bytes());
    format!("{digest:x}")[..16].to_string()
}

pub fn build_record(cfg: &SimConfig, points: &[PointStats], which: Iterations) -> RunRecord {
    let nmse_db = cfg.nmse_db.unwrap_or(f64::NEG_INFINITY);
    let mut rows = Vec::new();
    for p in points {
        let bits = p.frames * p.bits_per_frame;
        for ((filter, init), stats) in &p.combos {
            let first = match which {
                Iterations::Final => cfg.max_iters,
                Iterations::All if init.decides() => 0,
                Iterations::All => 1,
            };
            for iteration in first..=cfg.max_iters {
                let errors = stats.bit_errors[iteration];
                let detect = if iteration == 0 { 0 } else { stats.flops_detect[iteration - 1] };
                rows.push(ResultRow {
                    snr_db: p.snr_db,
                    iteration,
                    detector: filter.name().to_string(),
                    initializer: init.name().to_string(),
                    nmse_db,
                    frames: p.frames,
                    bits,
                    bit_errors: errors,
                    ber: errors as f64 / bits as f64,
                    flops_init: stats.flops_init / p.frames,
                    flops_detect: detect / p.frames,
                    seconds: stats.nanos as f64 * 1e-9,
                });
            }
        }
    }
    RunRecord {
        config_hash: config_hash(cfg),
        seed: cfg.seed,
        rows,
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
