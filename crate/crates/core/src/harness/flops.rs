//! Operation counts over a grid of frame sizes and their scaling ratios.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{apply_channel, BlockChannel, NoiseModel, TapTensor};
use crate::equalize::{detect_frame, DetectorConfig, Filter};
use crate::error::Result;
use crate::frame::{modulate, Alphabet, DdFrame, Dft, FrameDims};
use crate::init::{init_azi, init_dsgi, init_fmi, DsgiOptions};
use crate::C64;

/// Counts for one `(M', N, D)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlopSample {
    pub data_rows: usize,
    pub blocks: usize,
    pub depth: usize,
    pub azi_init: u64,
    pub dsgi_init: u64,
    pub fmi_init: u64,
    pub fmi_dense_equivalent: u64,
    /// One detector sweep, excluding setup.
    pub detect_per_iteration: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlopRatio {
    pub name: &'static str,
    pub ratio: f64,
    pub target: f64,
    pub tolerance: f64,
}

impl FlopRatio {
    pub fn passes(&self) -> bool {
        (self.ratio - self.target).abs() <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlopReport {
    pub samples: Vec<FlopSample>,
    pub ratios: Vec<FlopRatio>,
}

/// Measures every counter on one random channel of the given size.
pub fn measure(data_rows: usize, blocks: usize, depth: usize, seed: u64) -> Result<FlopSample> {
    let dims = FrameDims::new(data_rows + depth, blocks, depth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channel: BlockChannel = TapTensor::from_fn(dims, |_, _, d| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) / (1.0 + d as f64)
    })
    .into();
    let alphabet = Alphabet::new(16)?;
    let dft = Dft::new(blocks);
    let (frame, _) = DdFrame::random(dims, &alphabet, &mut rng);
    let noise = 0.01;
    let r = apply_channel(&modulate(&frame, &dft), &channel, NoiseModel { variance: noise }, &mut rng)?;
    let azi = init_azi(dims);
    let dsgi = init_dsgi(&r, &channel, 1.0, noise, &alphabet, &dft, DsgiOptions::default());
    let fmi = init_fmi(&r, &channel, 1.0, noise, &alphabet, &dft)?;
    let mut cfg = DetectorConfig::new(Filter::Lmmse, 2, 1.0, noise);
    cfg.stop_at_fixed_point = false;
    let run = detect_frame(&r, &channel, &azi, &cfg, &alphabet, &dft)?;
    Ok(FlopSample {
        data_rows,
        blocks,
        depth,
        azi_init: azi.flops,
        dsgi_init: dsgi.flops,
        fmi_init: fmi.flops,
        fmi_dense_equivalent: fmi.dense_equivalent_flops.unwrap_or(0),
        detect_per_iteration: run.iterations[1].flops - run.iterations[0].flops,
    })
}

/// Doubling experiments around `(M', N, D)`: `D → 2D` for DSGI and the
/// detector, `M' → 2M'` for dense-equivalent FMI.
pub fn count_flops(data_rows: usize, blocks: usize, depth: usize, seed: u64) -> Result<FlopReport> {
    let base = measure(data_rows, blocks, depth, seed)?;
    let deeper = measure(data_rows, blocks, 2 * depth, seed)?;
    let longer = measure(2 * data_rows, blocks, depth, seed)?;
    let ratio = |a: u64, b: u64| b as f64 / a as f64;
    let ratios = vec![
        FlopRatio {
            name: "dsgi_init_d_doubled",
            ratio: ratio(base.dsgi_init, deeper.dsgi_init),
            target: 4.0,
            tolerance: 1.2,
        },
        FlopRatio {
            name: "fmi_dense_m_doubled",
            ratio: ratio(base.fmi_dense_equivalent, longer.fmi_dense_equivalent),
            target: 8.0,
            tolerance: 2.4,
        },
        FlopRatio {
            name: "detect_d_doubled",
            ratio: ratio(base.detect_per_iteration, deeper.detect_per_iteration),
            target: 2.0,
            tolerance: 0.6,
        },
    ];
    Ok(FlopReport {
        samples: vec![base, deeper, longer],
        ratios,
    })
}

pub fn write_flops_csv<W: Write>(report: &FlopReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "data_rows",
        "blocks",
        "depth",
        "azi_init",
        "dsgi_init",
        "fmi_init",
        "fmi_dense_equivalent",
        "detect_per_iteration",
    ])?;
    for s in &report.samples {
        w.write_record([
            s.data_rows.to_string(),
            s.blocks.to_string(),
            s.depth.to_string(),
            s.azi_init.to_string(),
            s.dsgi_init.to_string(),
            s.fmi_init.to_string(),
            s.fmi_dense_equivalent.to_string(),
            s.detect_per_iteration.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn azi_costs_nothing_and_detection_is_deterministic() {
        let a = measure(32, 4, 4, 1).unwrap();
        let b = measure(32, 4, 4, 2).unwrap();
        assert_eq!(a.azi_init, 0);
        assert_eq!(a.detect_per_iteration, b.detect_per_iteration);
        assert_eq!(a.dsgi_init, b.dsgi_init);
        assert!(a.fmi_dense_equivalent > a.fmi_init);
    }
}
