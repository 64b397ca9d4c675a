use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{max_doppler_hz, ChannelModel, TdlProfile};
use crate::equalize::Filter;
use crate::error::{Error, Result};
use crate::frame::{Alphabet, FrameDims};
use crate::init::{DsgiOptions, Initializer};
use crate::pulse::PulseSpec;

const DESK_SCALE: &str = include_str!("../../presets/desk-scale.toml");
const PAPER_FULLSCALE: &str = include_str!("../../presets/paper-fullscale.toml");

/// Names accepted by [`SimConfig::preset`].
pub const PRESETS: [&str; 2] = ["desk-scale", "paper-fullscale"];

fn default_profile() -> String {
    "tdl-b".to_string()
}

fn default_signal_power() -> f64 {
    1.0
}

fn default_workers() -> usize {
    1
}

/// Experiment configuration, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Delay bins per block.
    pub m: usize,
    /// Blocks (Doppler bins).
    pub n: usize,
    /// Zero-padding length `D`.
    pub zp: usize,
    /// QAM order.
    pub order: usize,
    pub pulse_q: usize,
    pub rolloff: f64,
    pub carrier_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub speed_kmh: f64,
    /// `"tdl-b"` or `"custom"`.
    #[serde(default = "default_profile")]
    pub profile: String,
    /// `[normalized delay, power dB]` rows when `profile = "custom"`.
    #[serde(default)]
    pub profile_taps: Vec<[f64; 2]>,
    pub delay_spread_s: f64,
    #[serde(default = "default_signal_power")]
    pub signal_power: f64,
    pub snr_db: Vec<f64>,
    pub detector: Vec<Filter>,
    pub initializer: Vec<Initializer>,
    pub max_iters: usize,
    pub frames: usize,
    /// Path-gain estimation error; absent means perfect CSI.
    #[serde(default)]
    pub nmse_db: Option<f64>,
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub dsgi: DsgiOptions,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk-scale" => Self::from_toml(DESK_SCALE),
            "paper-fullscale" => Self::from_toml(PAPER_FULLSCALE),
            other => Err(Error::config(format!(
                "unknown preset '{other}' (expected one of {})",
                PRESETS.join(", ")
            ))),
        }
    }

    /// A preset name or a path to a TOML file.
    pub fn load(source: &str) -> Result<Self> {
        if PRESETS.contains(&source) {
            return Self::preset(source);
        }
        let path = Path::new(source);
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config '{source}': {e}")))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / (self.m as f64 * self.subcarrier_spacing_hz)
    }

    pub fn dims(&self) -> Result<FrameDims> {
        FrameDims::new(self.m, self.n, self.zp)
    }

    pub fn pulse(&self) -> Result<PulseSpec> {
        PulseSpec::new(self.pulse_q, self.rolloff, self.sample_period())
    }

    pub fn alphabet(&self) -> Result<Alphabet> {
        Alphabet::new(self.order)
    }

    pub fn tdl_profile(&self) -> Result<TdlProfile> {
        match self.profile.as_str() {
            "tdl-b" => Ok(TdlProfile::tdl_b()),
            "custom" => {
                let p = TdlProfile {
                    taps: self.profile_taps.iter().map(|r| (r[0], r[1])).collect(),
                };
                p.validate()?;
                Ok(p)
            }
            other => Err(Error::config(format!("unknown profile '{other}'"))),
        }
    }

    pub fn max_doppler(&self) -> f64 {
        max_doppler_hz(self.carrier_hz, self.speed_kmh)
    }

    pub fn channel_model(&self) -> Result<ChannelModel> {
        ChannelModel::new(
            self.tdl_profile()?,
            self.delay_spread_s,
            self.max_doppler(),
            &self.pulse()?,
            self.zp,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.m <= self.zp {
            return Err(Error::config(format!("M = {} must exceed D = {}", self.m, self.zp)));
        }
        if self.n == 0 {
            return Err(Error::config("N must be at least 1"));
        }
        if self.frames == 0 {
            return Err(Error::config("frames must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::config("workers must be at least 1"));
        }
        if !(self.subcarrier_spacing_hz > 0.0) {
            return Err(Error::config("subcarrier spacing must be positive"));
        }
        if !(self.signal_power > 0.0 && self.signal_power.is_finite()) {
            return Err(Error::config("signal power must be positive"));
        }
        if !(self.carrier_hz >= 0.0 && self.speed_kmh >= 0.0 && self.delay_spread_s >= 0.0) {
            return Err(Error::config("carrier, speed and delay spread must be non-negative"));
        }
        if let Some(x) = self.snr_db.iter().find(|x| x.is_nan() || x.is_infinite()) {
            return Err(Error::config(format!("SNR {x} dB is not finite")));
        }
        if matches!(self.nmse_db, Some(x) if x.is_nan() || x == f64::INFINITY) {
            return Err(Error::config("NMSE must be finite or -inf"));
        }
        if self.detector.is_empty() || self.initializer.is_empty() {
            return Err(Error::config("at least one detector and one initializer required"));
        }
        self.alphabet()?;
        self.dims()?;
        self.pulse()?.check_frame(self.m)?;
        self.channel_model()?;
        Ok(())
    }

    /// Detector/initializer pairs in row-major order.
    pub fn combos(&self) -> Vec<(Filter, Initializer)> {
        self.detector
            .iter()
            .flat_map(|&f| self.initializer.iter().map(move |&i| (f, i)))
            .collect()
    }
}
