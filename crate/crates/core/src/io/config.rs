//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instrument::{DeconvolutionOptions, InstrumentResponse};
use crate::model::{AtomicSystem, PulseSpec};
use crate::spectra::{QuadratureOptions, SpectralGrid};

/// Photon-energy axis of a scan, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            start: 40.514,
            stop: 41.114,
            step: 0.006,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !(self.stop >= self.start) || !(self.start > 0.0) {
            return Err(Error::invalid("scan", "need 0 < start <= stop and step > 0"));
        }
        Ok(())
    }

    pub fn photon_energies(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AveragingConfig {
    pub enabled: bool,
    pub n_shells: usize,
    pub i_min_fraction: f64,
}

impl Default for AveragingConfig {
    fn default() -> Self {
        AveragingConfig {
            enabled: false,
            n_shells: 16,
            i_min_fraction: 0.05,
        }
    }
}

/// Interaction times for `entropy` and `populations`. `stop` defaults to
/// the end of the pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeAxis {
    pub start: f64,
    pub stop: Option<f64>,
    pub n_points: usize,
}

impl Default for TimeAxis {
    fn default() -> Self {
        TimeAxis {
            start: 0.0,
            stop: None,
            n_points: 147,
        }
    }
}

impl TimeAxis {
    pub fn times(&self, pulse: &PulseSpec) -> Vec<f64> {
        let stop = self.stop.unwrap_or_else(|| pulse.end_of_pulse());
        if self.n_points <= 1 {
            return vec![stop];
        }
        let dt = (stop - self.start) / (self.n_points - 1) as f64;
        (0..self.n_points).map(|k| self.start + k as f64 * dt).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            svg: true,
        }
    }
}

/// Settings for `analyze`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    /// CSV map to analyze; a synthetic mixture is built when absent.
    pub input: Option<PathBuf>,
    pub deconvolve: bool,
    pub deconvolution: DeconvolutionOptions,
    pub sigma: f64,
    pub gamma: f64,
    pub n_starts: usize,
    pub max_iter: usize,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            input: None,
            deconvolve: true,
            deconvolution: DeconvolutionOptions::default(),
            sigma: 0.02,
            gamma: 0.01,
            n_starts: 5,
            max_iter: 200,
        }
    }
}

fn default_mixture() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub pulse: PulseSpec,
    #[serde(default)]
    pub atom: AtomicSystem,
    #[serde(default)]
    pub grid: SpectralGrid,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub averaging: AveragingConfig,
    #[serde(default)]
    pub instrument: InstrumentResponse,
    #[serde(default = "default_mixture")]
    pub mixture_fraction: f64,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub times: TimeAxis,
    #[serde(default)]
    pub quadrature: QuadratureOptions,
    #[serde(default)]
    pub analyze: AnalyzeConfig,
}

impl RunConfig {
    /// Resonant 73 fs flat-top pulse at 1.25×10¹³ W/cm² with default settings.
    pub fn reference_default() -> Self {
        RunConfig {
            pulse: PulseSpec::flat_top(crate::units::HE_ION_TRANSITION_EV, 1.25e13, 73.0)
                .expect("valid pulse"),
            atom: AtomicSystem::default(),
            grid: SpectralGrid::default(),
            scan: ScanConfig::default(),
            averaging: AveragingConfig::default(),
            instrument: InstrumentResponse::default(),
            mixture_fraction: default_mixture(),
            output: OutputConfig::default(),
            seed: 0,
            times: TimeAxis::default(),
            quadrature: QuadratureOptions::default(),
            analyze: AnalyzeConfig::default(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("at `{path}`: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Check every section; failures are reported as configuration errors.
    pub fn validate(&self) -> Result<()> {
        let wrap = |section: &str, r: Result<()>| {
            r.map_err(|e| Error::Config(format!("{section}: {e}")))
        };
        wrap("pulse", self.pulse.validate())?;
        wrap("atom", self.atom.validate())?;
        wrap("grid", self.grid.validate())?;
        wrap("scan", self.scan.validate())?;
        wrap("instrument", self.instrument.validate())?;
        if !(0.0..=1.0).contains(&self.mixture_fraction) {
            return Err(Error::Config("mixture_fraction must lie in [0, 1]".to_string()));
        }
        if self.averaging.enabled
            && (self.averaging.n_shells == 0
                || !(self.averaging.i_min_fraction > 0.0 && self.averaging.i_min_fraction < 1.0))
        {
            return Err(Error::Config(
                "averaging: need n_shells >= 1 and 0 < i_min_fraction < 1".to_string(),
            ));
        }
        if self.times.n_points == 0 {
            return Err(Error::Config("times.n_points must be >= 1".to_string()));
        }
        if let Some(stop) = self.times.stop {
            if !(stop >= self.times.start && stop <= self.pulse.total_window) {
                return Err(Error::Config("times must lie inside the pulse window".to_string()));
            }
        }
        if self.times.start < 0.0 {
            return Err(Error::Config("times.start must be >= 0".to_string()));
        }
        if self.quadrature.points_per_period < 8 {
            return Err(Error::Config("quadrature.points_per_period must be >= 8".to_string()));
        }
        if !(self.analyze.sigma > 0.0 && self.analyze.gamma > 0.0) {
            return Err(Error::Config("analyze: sigma and gamma must be > 0".to_string()));
        }
        Ok(())
    }

    /// The fully resolved configuration as JSON.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
