//! Configuration, tables, figures and metadata sidecars.

pub mod config;
pub mod csv;
pub mod svg;

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::Result;
use crate::spectra::SpectrumMap;

pub use config::RunConfig;

/// Modelling choices recorded in every metadata sidecar.
pub const MODEL_NOTES: &[&str] = &[
    "ion coupling (Omega/2) sigma_y in the rotating frame: b(tau) = (Omega/W) sin(W tau / 2) is real",
    "a(tau) = cos(W tau / 2) - i (detuning/W) sin(W tau / 2), detuning = omega - omega_ba",
    "channel amplitudes: composite Filon quadrature with cubic Hermite interpolation over t'",
    "photoionization coupling kappa^2 = Gamma / 2 pi with Gamma = 1 / tau_g",
    "ground amplitude g(t) = exp(-Gamma/2 * integral of envelope^2)",
    "populations from the time-domain (Parseval) form of the energy integral",
    "volume averaging: uniform intensity shells, weights 1/I",
    "photon bandwidth given as FWHM, spectrometer FWHM = reference_energy / resolving_power",
    "deconvolution: Richardson-Lucy with column-normalized truncated Gaussian kernel",
    "decomposition: Einstein Voigt + doublet sharing one Voigt shape, areas by NNLS, shapes by Levenberg-Marquardt",
];

/// Collects output files in one directory and writes their sidecars.
pub struct OutputWriter {
    dir: PathBuf,
    svg: bool,
    files: Vec<String>,
}

impl OutputWriter {
    pub fn new(dir: &Path, svg: bool) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            svg,
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_text(&mut self, name: &str, content: &str) -> Result<()> {
        std::fs::write(self.path(name), content)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_map(&mut self, name: &str, map: &SpectrumMap) -> Result<()> {
        self.write_text(name, &csv::map_to_string(map)?)
    }

    pub fn write_table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        self.write_text(name, &csv::table_to_string(header, rows)?)
    }

    /// Skipped when figures are disabled.
    pub fn write_svg(&mut self, name: &str, content: impl FnOnce() -> String) -> Result<()> {
        if self.svg {
            self.write_text(name, &content())?;
        }
        Ok(())
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Write `metadata.json` and one `<file>.meta.json` per output.
    pub fn finish(self, subcommand: &str, config: &RunConfig, results: Value) -> Result<Vec<String>> {
        let mut base = json!({
            "tool": {"name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION")},
            "subcommand": subcommand,
            "config": config.to_json(),
            "model": MODEL_NOTES,
            "results": results,
            "files": self.files,
        });
        let text = serde_json::to_string_pretty(&base)? + "\n";
        std::fs::write(self.path("metadata.json"), text)?;
        for f in &self.files {
            base["file"] = json!(f);
            let text = serde_json::to_string_pretty(&base)? + "\n";
            std::fs::write(self.path(&format!("{f}.meta.json")), text)?;
        }
        let mut all = self.files.clone();
        all.push("metadata.json".to_string());
        Ok(all)
    }
}
