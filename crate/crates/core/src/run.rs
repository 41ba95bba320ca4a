//! Subcommand drivers: each reads a [`RunConfig`], computes, and writes its
//! tables, figures and metadata into the output directory.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::entanglement;
use crate::error::{Error, Result};
use crate::instrument::{self, DecomposeHints, DecompositionResult};
use crate::io::csv::{fmt_num, fmt_opt};
use crate::io::svg::{self, Series};
use crate::io::{OutputWriter, RunConfig};
use crate::model::{self, AtomicSystem, RegimeReport};
use crate::spectra::{self, SpectrumMap};
use crate::units;

/// Intensities of the three measured data sets, W/cm².
pub const REFERENCE_INTENSITIES: [f64; 3] = [1.25e13, 3.35e12, 6.25e11];

fn writer(cfg: &RunConfig) -> Result<OutputWriter> {
    OutputWriter::new(&cfg.output.dir, cfg.output.svg)
}

/// End-of-pulse map over the configured photon-energy scan, focal-volume
/// averaged when enabled.
pub fn scan_map(cfg: &RunConfig, atom: &AtomicSystem) -> Result<SpectrumMap> {
    let hws = cfg.scan.photon_energies();
    let i_peak = cfg.pulse.peak_intensity;
    let build = |i: f64| {
        spectra::photon_energy_scan_with(
            &cfg.pulse.with_intensity(i),
            &atom.rescaled_rate(i_peak, i),
            &cfg.grid,
            &hws,
            &cfg.quadrature,
        )
    };
    let map = if cfg.averaging.enabled && i_peak > 0.0 {
        spectra::volume_average(build, i_peak, cfg.averaging.n_shells, cfg.averaging.i_min_fraction)?
    } else {
        build(i_peak)?
    };
    Ok(map
        .with_meta("peak_intensity_w_cm2", json!(i_peak))
        .with_meta("pulse_duration_fs", json!(cfg.pulse.fwhm_duration)))
}

/// Dressed-state curves E₋(ħω), E₊(ħω) as (kinetic, photon) points.
pub fn dressed_curves(cfg: &RunConfig, photon_energies: &[f64]) -> Result<[Vec<(f64, f64)>; 2]> {
    let mut lo = Vec::with_capacity(photon_energies.len());
    let mut hi = Vec::with_capacity(photon_energies.len());
    for &hw in photon_energies {
        let pulse = cfg.pulse.with_photon_energy(hw);
        let rabi = model::rabi_frequency(&pulse, &cfg.atom);
        let (a, b) = model::dressed_kinetic_energies(&pulse, &cfg.atom, rabi)?;
        lo.push((a, hw));
        hi.push((b, hw));
    }
    Ok([lo, hi])
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanSummary {
    pub n_photon_energies: usize,
    /// Smallest ridge separation in the map, eV.
    pub min_gap: Option<f64>,
    pub min_gap_photon_energy: Option<f64>,
    /// ħΩ at the configured intensity, eV.
    pub rabi_splitting: f64,
    pub files: Vec<String>,
}

pub fn run_scan(cfg: &RunConfig) -> Result<ScanSummary> {
    let map = scan_map(cfg, &cfg.atom)?;
    let ridges = spectra::ridges(&map, crate::peaks::DEFAULT_REL_THRESHOLD)?;
    let min = ridges
        .iter()
        .filter_map(|r| r.gap().map(|g| (g, r.photon_energy)))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let rabi = model::rabi_frequency(&cfg.pulse, &cfg.atom);
    let curves = dressed_curves(cfg, &map.photon_energies)?;

    let mut out = writer(cfg)?;
    out.write_map("scan.csv", &map)?;
    let rows: Vec<Vec<String>> = ridges
        .iter()
        .map(|r| vec![fmt_num(r.photon_energy), fmt_num(r.lower), fmt_opt(r.upper), fmt_opt(r.gap())])
        .collect();
    out.write_table("ridges.csv", &["photon_energy_ev", "lower_ev", "upper_ev", "gap_ev"], &rows)?;
    out.write_svg("scan.svg", || svg::heatmap(&map, "photoelectron spectrum", &curves))?;

    let mut summary = ScanSummary {
        n_photon_energies: map.n_rows(),
        min_gap: min.map(|m| m.0),
        min_gap_photon_energy: min.map(|m| m.1),
        rabi_splitting: units::HBAR_EV_FS * rabi,
        files: Vec::new(),
    };
    let results = json!({
        "n_photon_energies": summary.n_photon_energies,
        "min_gap_ev": summary.min_gap,
        "min_gap_photon_energy_ev": summary.min_gap_photon_energy,
        "rabi_splitting_ev": summary.rabi_splitting,
        "map_meta": map.meta,
    });
    summary.files = out.finish("scan", cfg, results)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropySummary {
    pub final_entropy: f64,
    pub final_phases: Option<(f64, f64)>,
    pub electron_speed_nm_fs: f64,
    /// Classical photoelectron travel during the pulse, nm.
    pub classical_extent_nm: f64,
    pub files: Vec<String>,
}

pub fn run_entropy(cfg: &RunConfig) -> Result<EntropySummary> {
    let times = cfg.times.times(&cfg.pulse);
    let report = entanglement::entropy_trace_with(&cfg.pulse, &cfg.atom, &cfg.grid, &times, &cfg.quadrature)?;
    let center = model::einstein_energy(&cfg.pulse, &cfg.atom)
        + 0.5 * units::HBAR_EV_FS * cfg.pulse.detuning(&cfg.atom);
    let speed = units::electron_speed_nm_fs(center);
    let extent = speed * cfg.pulse.fwhm_duration;

    let mut out = writer(cfg)?;
    let rows: Vec<Vec<String>> = (0..times.len())
        .map(|k| {
            vec![
                fmt_num(report.times[k]),
                fmt_num(report.entropy[k]),
                fmt_opt(report.phase_minus[k]),
                fmt_opt(report.phase_plus[k]),
                fmt_num(report.bell_minus[k]),
                fmt_num(report.bell_plus[k]),
                fmt_num(report.p_ion[k]),
            ]
        })
        .collect();
    out.write_table(
        "entropy.csv",
        &["time_fs", "entropy", "phase_minus_rad", "phase_plus_rad", "w_minus", "w_plus", "p_ion"],
        &rows,
    )?;
    let nan_phase = |v: &[Option<f64>]| v.iter().map(|p| p.unwrap_or(f64::NAN)).collect::<Vec<_>>();
    let (pm, pp) = (nan_phase(&report.phase_minus), nan_phase(&report.phase_plus));
    out.write_svg("entropy.svg", || {
        svg::line_plot(
            "entanglement entropy",
            "interaction time (fs)",
            "S (bits)",
            &[Series { name: "S", x: &report.times, y: &report.entropy }],
        )
    })?;
    out.write_svg("phases.svg", || {
        svg::line_plot(
            "channel phase difference",
            "interaction time (fs)",
            "arg c_b - arg c_a (rad)",
            &[
                Series { name: "lower peak", x: &report.times, y: &pm },
                Series { name: "upper peak", x: &report.times, y: &pp },
            ],
        )
    })?;

    let last = times.len() - 1;
    let final_phases = report.phase_minus[last].zip(report.phase_plus[last]);
    let mut summary = EntropySummary {
        final_entropy: report.entropy[last],
        final_phases,
        electron_speed_nm_fs: speed,
        classical_extent_nm: extent,
        files: Vec::new(),
    };
    let results = json!({
        "final_entropy": summary.final_entropy,
        "final_phase_minus_rad": final_phases.map(|p| p.0),
        "final_phase_plus_rad": final_phases.map(|p| p.1),
        "electron_speed_nm_fs": speed,
        "classical_extent_nm": extent,
        "rabi_period_fs": model::RabiParams::from_pulse(&cfg.pulse, &cfg.atom).rabi_period,
    });
    summary.files = out.finish("entropy", cfg, results)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct PopulationSummary {
    pub crossings: usize,
    pub rabi_period: f64,
    /// R² of p_total over [T_R, 6T_R] when that window is sampled.
    pub yield_r_squared: Option<f64>,
    pub final_p_a: f64,
    pub final_p_b: f64,
    pub files: Vec<String>,
}

pub fn run_populations(cfg: &RunConfig) -> Result<PopulationSummary> {
    let times = cfg.times.times(&cfg.pulse);
    let trace = spectra::population_trace_with(&cfg.pulse, &cfg.atom, &times, &cfg.quadrature)?;
    let t_r = model::RabiParams::from_pulse(&cfg.pulse, &cfg.atom).rabi_period;
    let crossings = if t_r.is_finite() { spectra::crossing_count(&trace, t_r) } else { 0 };
    let r2 = if t_r.is_finite() {
        spectra::yield_linearity(&trace, t_r, 6.0 * t_r)
    } else {
        None
    };

    let mut out = writer(cfg)?;
    let rows: Vec<Vec<String>> = (0..times.len())
        .map(|k| {
            vec![
                fmt_num(trace.times[k]),
                fmt_num(trace.p_a[k]),
                fmt_num(trace.p_b[k]),
                fmt_num(trace.p_total[k]),
                fmt_num(trace.p_ground[k]),
            ]
        })
        .collect();
    out.write_table("populations.csv", &["time_fs", "p_a", "p_b", "p_total", "p_ground"], &rows)?;
    out.write_svg("populations.svg", || {
        svg::line_plot(
            "ionic populations",
            "interaction time (fs)",
            "population",
            &[
                Series { name: "1s ion", x: &trace.times, y: &trace.p_a },
                Series { name: "2p ion", x: &trace.times, y: &trace.p_b },
                Series { name: "total", x: &trace.times, y: &trace.p_total },
            ],
        )
    })?;

    let last = times.len() - 1;
    let mut summary = PopulationSummary {
        crossings,
        rabi_period: t_r,
        yield_r_squared: r2,
        final_p_a: trace.p_a[last],
        final_p_b: trace.p_b[last],
        files: Vec::new(),
    };
    let results = json!({
        "crossings": crossings,
        "rabi_period_fs": if t_r.is_finite() { json!(t_r) } else { json!(null) },
        "yield_r_squared": r2,
        "final_p_a": summary.final_p_a,
        "final_p_b": summary.final_p_b,
    });
    summary.files = out.finish("populations", cfg, results)?;
    Ok(summary)
}

/// Outcome of one photon-energy slice in `analyze`.
#[derive(Debug, Clone, Serialize)]
pub struct SliceResult {
    pub photon_energy: f64,
    /// "ok", "not_converged" or "failed: <reason>".
    pub status: String,
    pub fit: Option<DecompositionResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeSummary {
    pub source: String,
    pub slices: Vec<SliceResult>,
    pub files: Vec<String>,
}

/// Broadened mixture of the dressed and undressed maps.
pub fn synthetic_mixture(cfg: &RunConfig) -> Result<SpectrumMap> {
    let entangled = scan_map(cfg, &cfg.atom)?;
    let einstein = scan_map(cfg, &cfg.atom.undressed())?;
    let mixed = instrument::mixture_map(&entangled, &einstein, cfg.mixture_fraction)?;
    instrument::convolve_map(&mixed, &cfg.instrument)
}

/// Deconvolve (optionally) and decompose one slice.
pub fn analyze_slice(cfg: &RunConfig, map: &SpectrumMap, row: usize) -> Result<(Vec<f64>, SliceResult)> {
    let grid = map.grid()?;
    let hw = map.photon_energies[row];
    let data = if cfg.analyze.deconvolve {
        instrument::deconvolve(map.row(row), grid.spacing(), &cfg.instrument, &cfg.analyze.deconvolution)?
    } else {
        map.row(row).to_vec()
    };
    let mut hints = DecomposeHints::from_model(&cfg.pulse.with_photon_energy(hw), &cfg.atom)?
        .with_widths(cfg.analyze.sigma, cfg.analyze.gamma)
        .with_seed(cfg.seed);
    hints.n_starts = cfg.analyze.n_starts;
    hints.max_iter = cfg.analyze.max_iter;
    let slice = match instrument::decompose(&data, grid.e_min, grid.spacing(), &hints) {
        Ok(fit) => SliceResult { photon_energy: hw, status: "ok".to_string(), fit: Some(fit) },
        Err(Error::FitNotConverged { best, .. }) => SliceResult {
            photon_energy: hw,
            status: "not_converged".to_string(),
            fit: Some(*best),
        },
        Err(e) => SliceResult { photon_energy: hw, status: format!("failed: {e}"), fit: None },
    };
    Ok((data, slice))
}

pub fn run_analyze(cfg: &RunConfig, input: Option<&Path>) -> Result<AnalyzeSummary> {
    let mut out = writer(cfg)?;
    let input = input.or(cfg.analyze.input.as_deref());
    let (map, source) = match input {
        Some(p) => (crate::io::csv::read_map(p)?, p.display().to_string()),
        None => {
            let m = synthetic_mixture(cfg)?;
            out.write_map("synthetic_input.csv", &m)?;
            (m, "synthetic_input.csv".to_string())
        }
    };
    let grid = map.grid()?;
    let energies = grid.energies();

    let per_row: Vec<(Vec<f64>, SliceResult)> = (0..map.n_rows())
        .into_par_iter()
        .map(|r| analyze_slice(cfg, &map, r))
        .collect::<Result<_>>()?;

    let mut deconvolved = Vec::with_capacity(map.intensity.len());
    let mut einstein = Vec::with_capacity(map.intensity.len());
    let mut entangled = Vec::with_capacity(map.intensity.len());
    for (data, slice) in &per_row {
        deconvolved.extend_from_slice(data);
        match &slice.fit {
            Some(f) => {
                einstein.extend(energies.iter().map(|&e| f.einstein_eval(e)));
                entangled.extend(energies.iter().map(|&e| f.doublet_eval(e)));
            }
            None => {
                einstein.extend(std::iter::repeat_n(0.0, energies.len()));
                entangled.extend(std::iter::repeat_n(0.0, energies.len()));
            }
        }
    }
    let axes = |v: Vec<f64>| SpectrumMap::new(map.photon_energies.clone(), map.kinetic_energies.clone(), v);
    let deconvolved = axes(deconvolved)?;
    let einstein = axes(einstein)?;
    let entangled = axes(entangled)?;
    out.write_map("deconvolved_map.csv", &deconvolved)?;
    out.write_map("einstein_map.csv", &einstein)?;
    out.write_map("entangled_map.csv", &entangled)?;

    let rows: Vec<Vec<String>> = per_row
        .iter()
        .map(|(_, s)| {
            let mut r = vec![fmt_num(s.photon_energy), s.status.clone()];
            match &s.fit {
                Some(f) => r.extend([
                    fmt_num(f.entangled_fraction),
                    fmt_num(f.einstein_line.center),
                    fmt_num(f.doublet.0.center),
                    fmt_num(f.doublet.1.center),
                    fmt_num(f.einstein_line.amplitude),
                    fmt_num(f.doublet.0.amplitude),
                    fmt_num(f.doublet.1.amplitude),
                    fmt_num(f.residual_norm),
                ]),
                None => r.extend(std::iter::repeat_n(String::new(), 8)),
            }
            r
        })
        .collect();
    out.write_table(
        "decomposition.csv",
        &[
            "photon_energy_ev",
            "status",
            "entangled_fraction",
            "einstein_center_ev",
            "lower_center_ev",
            "upper_center_ev",
            "einstein_area",
            "lower_area",
            "upper_area",
            "residual_norm",
        ],
        &rows,
    )?;
    out.write_svg("input.svg", || svg::heatmap(&map, "input map", &[]))?;
    out.write_svg("einstein_map.svg", || svg::heatmap(&einstein, "non-entangled part", &[]))?;
    out.write_svg("entangled_map.svg", || svg::heatmap(&entangled, "entangled part", &[]))?;

    let slices: Vec<SliceResult> = per_row.into_iter().map(|(_, s)| s).collect();
    let flagged = slices.iter().filter(|s| s.status != "ok").count();
    let results = json!({
        "source": source,
        "n_slices": slices.len(),
        "flagged_slices": flagged,
        "kernel_sigma_ev": cfg.instrument.kernel_sigma(),
    });
    let files = out.finish("analyze", cfg, results)?;
    Ok(AnalyzeSummary { source, slices, files })
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeTable {
    pub configured: RegimeReport,
    pub reference: Vec<RegimeReport>,
    pub files: Vec<String>,
}

impl RegimeTable {
    /// Human-readable lines, one per intensity.
    pub fn lines(&self) -> Vec<String> {
        std::iter::once(("configured", &self.configured))
            .chain(self.reference.iter().map(|r| ("reference", r)))
            .map(|(label, r)| {
                format!(
                    "{label:<10} I = {:.3e} W/cm2  dt = {:.1} fs  T_R = {:.2} fs  {:?}  {}",
                    r.intensity,
                    r.duration,
                    r.rabi_period,
                    r.region,
                    regime_word(r)
                )
            })
            .collect()
    }
}

fn regime_word(r: &RegimeReport) -> &'static str {
    if r.entangling {
        "entangling"
    } else if r.boundary {
        "boundary"
    } else {
        "not entangling"
    }
}

pub fn run_regime(cfg: &RunConfig) -> Result<RegimeTable> {
    let dt = cfg.pulse.fwhm_duration;
    let configured = model::regime_classify(cfg.pulse.peak_intensity, dt, &cfg.atom)?;
    let reference = REFERENCE_INTENSITIES
        .iter()
        .map(|&i| model::regime_classify(i, dt, &cfg.atom))
        .collect::<Result<Vec<_>>>()?;
    let mut out = writer(cfg)?;
    let rows: Vec<Vec<String>> = std::iter::once(&configured)
        .chain(&reference)
        .map(|r| {
            vec![
                fmt_num(r.intensity),
                fmt_num(r.duration),
                fmt_num(r.rabi_period),
                fmt_num(r.tau_g),
                fmt_num(r.tau_ion),
                format!("{:?}", r.region),
                regime_word(r).to_string(),
            ]
        })
        .collect();
    out.write_table(
        "regime.csv",
        &["intensity_w_cm2", "duration_fs", "rabi_period_fs", "tau_g_fs", "tau_ion_fs", "region", "verdict"],
        &rows,
    )?;
    let results = json!({ "configured": configured, "reference": reference });
    let files = out.finish("regime", cfg, results)?;
    Ok(RegimeTable { configured, reference, files })
}
