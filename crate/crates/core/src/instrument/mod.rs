//! Instrument broadening, Richardson–Lucy deconvolution and the Voigt
//! decomposition into entangled and non-entangled parts.

mod fit;
mod voigt;

pub use fit::{decompose, DecomposeHints, DecompositionResult};
pub use voigt::{voigt_eval, voigt_profile, VoigtPeak};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::SpectrumMap;

/// FWHM / σ of a Gaussian.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

/// Gaussian kernels are truncated at this many σ.
const TRUNCATION_SIGMAS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentResponse {
    /// eV
    pub photon_bandwidth_sigma: f64,
    /// E/ΔE of the spectrometer at `reference_energy`.
    pub spectrometer_resolving_power: f64,
    /// eV
    pub reference_energy: f64,
}

impl Default for InstrumentResponse {
    /// 37 meV FWHM photon bandwidth, E/ΔE = 50 at 1 eV.
    fn default() -> Self {
        InstrumentResponse {
            photon_bandwidth_sigma: 0.037 / FWHM_PER_SIGMA,
            spectrometer_resolving_power: 50.0,
            reference_energy: 1.0,
        }
    }
}

impl InstrumentResponse {
    pub fn validate(&self) -> Result<()> {
        if !(self.photon_bandwidth_sigma > 0.0) {
            return Err(Error::invalid("photon_bandwidth_sigma", "must be > 0"));
        }
        if !(self.spectrometer_resolving_power > 0.0) {
            return Err(Error::invalid("spectrometer_resolving_power", "must be > 0"));
        }
        if !(self.reference_energy > 0.0) {
            return Err(Error::invalid("reference_energy", "must be > 0"));
        }
        Ok(())
    }

    pub fn spectrometer_sigma(&self) -> f64 {
        self.reference_energy / self.spectrometer_resolving_power / FWHM_PER_SIGMA
    }

    /// Combined σ of photon bandwidth and spectrometer, eV.
    pub fn kernel_sigma(&self) -> f64 {
        self.photon_bandwidth_sigma.hypot(self.spectrometer_sigma())
    }
}

/// Column-normalized truncated Gaussian blur on a uniform grid: the content
/// of every input bin is redistributed over the bins inside the grid.
#[derive(Debug, Clone)]
pub struct GaussianKernel {
    taps: Vec<f64>,
    half: usize,
}

impl GaussianKernel {
    pub fn new(sigma: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::invalid("spacing", "must be > 0"));
        }
        if !(sigma >= spacing / 4.0) {
            return Err(Error::KernelUnderResolved { sigma, spacing });
        }
        let half = (TRUNCATION_SIGMAS * sigma / spacing).ceil() as usize;
        let taps = (0..=2 * half)
            .map(|k| {
                let x = (k as f64 - half as f64) * spacing / sigma;
                (-0.5 * x * x).exp()
            })
            .collect();
        Ok(GaussianKernel { taps, half })
    }

    fn column_norms(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|j| {
                let lo = j.saturating_sub(self.half);
                let hi = (j + self.half).min(n - 1);
                (lo..=hi).map(|i| self.taps[i + self.half - j]).sum()
            })
            .collect()
    }

    /// out = K x
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let norms = self.column_norms(n);
        let mut out = vec![0.0; n];
        for (j, (&xj, nj)) in x.iter().zip(&norms).enumerate() {
            if xj == 0.0 {
                continue;
            }
            let lo = j.saturating_sub(self.half);
            let hi = (j + self.half).min(n - 1);
            for (i, o) in out.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *o += self.taps[i + self.half - j] / nj * xj;
            }
        }
        out
    }

    /// out = Kᵀ y
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        let norms = self.column_norms(n);
        (0..n)
            .map(|j| {
                let lo = j.saturating_sub(self.half);
                let hi = (j + self.half).min(n - 1);
                (lo..=hi).map(|i| self.taps[i + self.half - j] * y[i]).sum::<f64>() / norms[j]
            })
            .collect()
    }
}

fn check_finite(p: &[f64]) -> Result<()> {
    match p.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::NonFinite(k)),
        None => Ok(()),
    }
}

/// Blur a spectrum sampled with `spacing` by the instrument kernel.
pub fn gaussian_convolve(p: &[f64], spacing: f64, response: &InstrumentResponse) -> Result<Vec<f64>> {
    response.validate()?;
    convolve_sigma(p, spacing, response.kernel_sigma())
}

pub fn convolve_sigma(p: &[f64], spacing: f64, sigma: f64) -> Result<Vec<f64>> {
    check_finite(p)?;
    Ok(GaussianKernel::new(sigma, spacing)?.apply(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeconvolutionOptions {
    pub max_iter: usize,
    pub stop_tol: f64,
}

impl Default for DeconvolutionOptions {
    fn default() -> Self {
        DeconvolutionOptions {
            max_iter: 200,
            stop_tol: 1e-6,
        }
    }
}

/// I-divergence D(d ‖ m).
fn i_divergence(d: &[f64], m: &[f64]) -> f64 {
    d.iter()
        .zip(m)
        .map(|(&di, &mi)| {
            let log_term = if di > 0.0 && mi > 0.0 { di * (di / mi).ln() } else { 0.0 };
            log_term - di + mi
        })
        .sum()
}

/// Richardson–Lucy deconvolution. Every iterate is non-negative and keeps
/// the total of the input.
pub fn deconvolve(
    p_meas: &[f64],
    spacing: f64,
    response: &InstrumentResponse,
    opts: &DeconvolutionOptions,
) -> Result<Vec<f64>> {
    response.validate()?;
    deconvolve_sigma(p_meas, spacing, response.kernel_sigma(), opts)
}

pub fn deconvolve_sigma(
    p_meas: &[f64],
    spacing: f64,
    sigma: f64,
    opts: &DeconvolutionOptions,
) -> Result<Vec<f64>> {
    check_finite(p_meas)?;
    if p_meas.iter().any(|&v| v < 0.0) {
        return Err(Error::Domain("deconvolution input must be >= 0".to_string()));
    }
    let kernel = GaussianKernel::new(sigma, spacing)?;
    let mut u = p_meas.to_vec();
    if u.iter().all(|&v| v == 0.0) {
        return Ok(u);
    }
    let mut model = kernel.apply(&u);
    let mut objective = i_divergence(p_meas, &model);
    for _ in 0..opts.max_iter {
        let ratio: Vec<f64> = p_meas
            .iter()
            .zip(&model)
            .map(|(&d, &m)| if m > 0.0 { d / m } else { 0.0 })
            .collect();
        let correction = kernel.apply_transpose(&ratio);
        u.iter_mut().zip(&correction).for_each(|(ui, c)| *ui *= c);
        model = kernel.apply(&u);
        let next = i_divergence(p_meas, &model);
        let change = (objective - next).abs() / objective.abs().max(f64::MIN_POSITIVE);
        objective = next;
        if change < opts.stop_tol {
            break;
        }
    }
    Ok(u)
}

/// Convolve every row of a map.
pub fn convolve_map(map: &SpectrumMap, response: &InstrumentResponse) -> Result<SpectrumMap> {
    let spacing = map.grid()?.spacing();
    let rows = map
        .rows()
        .map(|r| gaussian_convolve(r, spacing, response))
        .collect::<Result<Vec<_>>>()?;
    let mut out =
        SpectrumMap::from_rows(map.photon_energies.clone(), map.kinetic_energies.clone(), rows)?;
    out.meta = map.meta.clone();
    out.meta.insert(
        "instrument_kernel_sigma_ev".to_string(),
        serde_json::json!(response.kernel_sigma()),
    );
    Ok(out)
}

/// fraction·entangled + (1 − fraction)·einstein.
pub fn mixture_map(entangled: &SpectrumMap, einstein: &SpectrumMap, fraction: f64) -> Result<SpectrumMap> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::invalid("mixture_fraction", "must lie in [0, 1]"));
    }
    if !entangled.same_axes(einstein) {
        return Err(Error::AxisMismatch("mixture maps have different axes".to_string()));
    }
    let intensity = entangled
        .intensity
        .iter()
        .zip(&einstein.intensity)
        .map(|(a, b)| fraction * a + (1.0 - fraction) * b)
        .collect();
    Ok(SpectrumMap::new(
        entangled.photon_energies.clone(),
        entangled.kinetic_energies.clone(),
        intensity,
    )?
    .with_meta("mixture_fraction", serde_json::json!(fraction)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_line(n: usize, dx: f64, c: f64, s: f64) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let x = k as f64 * dx;
                (-(x - c).powi(2) / (2.0 * s * s)).exp()
            })
            .collect()
    }

    #[test]
    fn default_kernel_width() {
        let r = InstrumentResponse::default();
        assert!((r.spectrometer_sigma() - 0.02 / FWHM_PER_SIGMA).abs() < 1e-15);
        assert!((r.kernel_sigma() - 0.0179).abs() < 2e-4);
    }

    #[test]
    fn spike_becomes_gaussian_with_same_area() {
        let n = 401;
        let dx = 0.001;
        let mut p = vec![0.0; n];
        p[200] = 1.0;
        let out = convolve_sigma(&p, dx, 0.01).unwrap();
        let area: f64 = out.iter().sum();
        assert!((area - 1.0).abs() < 1e-12);
        let var: f64 = out.iter().enumerate().map(|(k, v)| v * ((k as f64 - 200.0) * dx).powi(2)).sum();
        assert!((var.sqrt() - 0.01).abs() < 1e-5);
    }

    #[test]
    fn edge_mass_is_kept() {
        let mut p = vec![0.0; 100];
        p[0] = 2.0;
        p[99] = 1.0;
        let out = convolve_sigma(&p, 0.01, 0.05).unwrap();
        assert!((out.iter().sum::<f64>() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_stays_constant_inside() {
        let out = convolve_sigma(&[1.0; 300], 0.01, 0.02).unwrap();
        assert!(out[20..280].iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn under_resolved_kernel() {
        assert!(matches!(
            convolve_sigma(&[1.0; 10], 1.0, 0.2),
            Err(Error::KernelUnderResolved { .. })
        ));
    }

    #[test]
    fn round_trip_sharpens_doublet() {
        let n = 801;
        let dx = 0.0025;
        let truth: Vec<f64> = gaussian_line(n, dx, 0.8, 0.01)
            .iter()
            .zip(gaussian_line(n, dx, 1.2, 0.01))
            .map(|(a, b)| a + b)
            .collect();
        let blurred = convolve_sigma(&truth, dx, 0.03).unwrap();
        let opts = DeconvolutionOptions { max_iter: 500, stop_tol: 1e-9 };
        let rec = deconvolve_sigma(&blurred, dx, 0.03, &opts).unwrap();
        assert!(rec.iter().all(|&v| v >= 0.0));
        let a0: f64 = blurred.iter().sum();
        let a1: f64 = rec.iter().sum();
        assert!((a1 - a0).abs() / a0 < 1e-3);
        let peak_blur = blurred.iter().cloned().fold(0.0, f64::max);
        let peak_rec = rec.iter().cloned().fold(0.0, f64::max);
        assert!(peak_rec > peak_blur);
        let centroid = |lo: usize, hi: usize| {
            let w: f64 = rec[lo..hi].iter().sum();
            rec[lo..hi].iter().enumerate().map(|(k, v)| (lo + k) as f64 * dx * v).sum::<f64>() / w
        };
        assert!((centroid(0, 400) - 0.8).abs() < 0.03 / 5.0);
        assert!((centroid(400, n) - 1.2).abs() < 0.03 / 5.0);
    }

    #[test]
    fn zero_deconvolves_to_zero() {
        let out = deconvolve_sigma(&[0.0; 50], 0.01, 0.02, &DeconvolutionOptions::default()).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
        assert!(deconvolve_sigma(&[f64::NAN; 5], 0.01, 0.02, &DeconvolutionOptions::default()).is_err());
    }

    #[test]
    fn mixture_endpoints() {
        let a = SpectrumMap::new(vec![1.0], vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        let b = SpectrumMap::new(vec![1.0], vec![0.0, 1.0], vec![3.0, 5.0]).unwrap();
        assert_eq!(mixture_map(&a, &b, 1.0).unwrap().intensity, a.intensity);
        assert_eq!(mixture_map(&a, &b, 0.0).unwrap().intensity, b.intensity);
        assert!(mixture_map(&a, &b, 1.5).is_err());
        let c = SpectrumMap::new(vec![2.0], vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        assert!(matches!(mixture_map(&a, &c, 0.5), Err(Error::AxisMismatch(_))));
    }
}
