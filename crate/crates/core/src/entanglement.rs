//! Conditioned ion density matrix, entanglement entropy and phase structure
//! of the photoelectron–ion state.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AtomicSystem, PulseSpec};
use crate::peaks;
use crate::spectra::{self, ChannelAmplitudes, QuadratureOptions, SpectralGrid};
use crate::units::HBAR_EV_FS;

/// Eigenvalues below this are an error; between it and 0 they are clamped.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// ρ_I conditioned on ionization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedIonDensity {
    pub matrix: [[Complex64; 2]; 2],
    pub p_ion: f64,
    pub time: f64,
}

impl ReducedIonDensity {
    pub fn from_matrix(matrix: [[Complex64; 2]; 2]) -> Self {
        ReducedIonDensity {
            matrix,
            p_ion: 1.0,
            time: 0.0,
        }
    }

    pub fn diagonal(p0: f64, p1: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self::from_matrix([[Complex64::new(p0, 0.0), z], [z, Complex64::new(p1, 0.0)]])
    }

    pub fn trace(&self) -> f64 {
        self.matrix[0][0].re + self.matrix[1][1].re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let m = &self.matrix;
        (m[0][1] - m[1][0].conj())
            .norm()
            .max(m[0][0].im.abs())
            .max(m[1][1].im.abs())
    }

    /// Eigenvalues in ascending order (unclamped).
    pub fn eigenvalues(&self) -> [f64; 2] {
        let m = &self.matrix;
        let half_tr = 0.5 * (m[0][0].re + m[1][1].re);
        let half_diff = 0.5 * (m[0][0].re - m[1][1].re);
        let r = half_diff.hypot(m[0][1].norm());
        [half_tr - r, half_tr + r]
    }
}

/// ρ_I[i][j] = Σ_E c_i c_j* ΔE / P_ion.
pub fn reduced_ion_density_matrix(amps: &ChannelAmplitudes) -> Result<ReducedIonDensity> {
    let p_ion = amps.p_ion();
    if !(p_ion > 0.0) {
        return Err(Error::NoIonization);
    }
    let de = amps.grid.spacing();
    let chans = [&amps.c_a, &amps.c_b];
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in i..2 {
            let s: Complex64 = chans[i]
                .iter()
                .zip(chans[j])
                .map(|(x, y)| x * y.conj())
                .sum();
            m[i][j] = s * de / p_ion;
        }
    }
    m[0][0].im = 0.0;
    m[1][1].im = 0.0;
    m[1][0] = m[0][1].conj();
    Ok(ReducedIonDensity {
        matrix: m,
        p_ion,
        time: amps.time,
    })
}

/// −Σ λ log₂ λ over the given eigenvalues with 0·log 0 = 0.
pub fn entropy_of_eigenvalues(eigs: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in eigs {
        if l < -PSD_TOLERANCE {
            return Err(Error::NotPsd(l));
        }
        if l > 0.0 {
            s -= l * l.log2();
        }
    }
    Ok(s.max(0.0))
}

/// von Neumann entropy in bits.
pub fn entropy(rho: &ReducedIonDensity) -> Result<f64> {
    let eigs = rho.eigenvalues();
    // renormalize in case quadrature left a trace defect
    let tr = eigs[0].max(0.0) + eigs[1].max(0.0);
    if eigs[0] < -PSD_TOLERANCE {
        return Err(Error::NotPsd(eigs[0]));
    }
    if !(tr > 0.0) {
        return Err(Error::NoIonization);
    }
    Ok(entropy_of_eigenvalues(&[eigs[0].max(0.0) / tr, eigs[1] / tr])?.min(1.0))
}

/// Wrap to (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

fn interpolate(c: &[Complex64], grid: &SpectralGrid, e: f64) -> Complex64 {
    let x = ((e - grid.e_min) / grid.spacing()).clamp(0.0, (grid.n_points - 1) as f64);
    let k = (x.floor() as usize).min(grid.n_points - 2);
    let f = x - k as f64;
    c[k] * (1.0 - f) + c[k + 1] * f
}

/// Peak positions (E₋, E₊) of the doublet in P(E).
pub fn doublet_peaks(amps: &ChannelAmplitudes, rabi_frequency: f64) -> Result<(f64, f64)> {
    let spectrum = spectra::photoelectron_spectrum(amps);
    let grid = amps.grid;
    let found = peaks::find_peaks(
        &spectrum,
        grid.e_min,
        grid.spacing(),
        peaks::DEFAULT_REL_THRESHOLD,
    );
    let (lo, hi) =
        peaks::dominant_pair(&found, amps.center).ok_or(Error::PeaksUnresolved { found: found.len() })?;
    // a sidelobe pair closer than a quarter of the Rabi splitting is not a doublet
    if hi.position - lo.position < 0.25 * HBAR_EV_FS * rabi_frequency.abs() {
        return Err(Error::PeaksUnresolved { found: found.len() });
    }
    Ok((lo.position, hi.position))
}

/// arg c_b − arg c_a at the lower and upper doublet peaks, in (−π, π].
pub fn channel_phase_difference(amps: &ChannelAmplitudes, rabi_frequency: f64) -> Result<(f64, f64)> {
    let (lo, hi) = doublet_peaks(amps, rabi_frequency)?;
    let phase = |e: f64| {
        let a = interpolate(&amps.c_a, &amps.grid, e);
        let b = interpolate(&amps.c_b, &amps.grid, e);
        wrap_phase(b.arg() - a.arg())
    };
    Ok((phase(lo), phase(hi)))
}

/// Weights of the joint state on (|a⟩ + i|b⟩)/√2 ⊗ {E below centre} and
/// (|a⟩ − i|b⟩)/√2 ⊗ {E above centre}.
pub fn bell_overlap(amps: &ChannelAmplitudes) -> Result<(f64, f64)> {
    let p_ion = amps.p_ion();
    if !(p_ion > 0.0) {
        return Err(Error::NoIonization);
    }
    let i = Complex64::new(0.0, 1.0);
    let de = amps.grid.spacing();
    let tol = 1e-9 * de;
    let (mut w_minus, mut w_plus) = (0.0, 0.0);
    for (k, (a, b)) in amps.c_a.iter().zip(&amps.c_b).enumerate() {
        let e = amps.grid.energy(k);
        let minus = ((a - i * b) * FRAC_1_SQRT_2).norm_sqr();
        let plus = ((a + i * b) * FRAC_1_SQRT_2).norm_sqr();
        if (e - amps.center).abs() <= tol {
            w_minus += 0.5 * minus;
            w_plus += 0.5 * plus;
        } else if e < amps.center {
            w_minus += minus;
        } else {
            w_plus += plus;
        }
    }
    Ok((w_minus * de / p_ion, w_plus * de / p_ion))
}

/// Nonzero spectrum of the discretized photoelectron density
/// ρ_P(E, E') = Σ_i c_i(E) c_i(E')* ΔE / P_ion, from a dense Hermitian
/// eigen-decomposition (O(n³); meant for small grids). Eigenvalues above
/// `cutoff` are returned in ascending order.
pub fn photoelectron_density_eigenvalues(amps: &ChannelAmplitudes, cutoff: f64) -> Result<Vec<f64>> {
    let p_ion = amps.p_ion();
    if !(p_ion > 0.0) {
        return Err(Error::NoIonization);
    }
    let n = amps.grid.n_points;
    let scale = amps.grid.spacing() / p_ion;
    let rho = DMatrix::<Complex64>::from_fn(n, n, |r, c| {
        (amps.c_a[r] * amps.c_a[c].conj() + amps.c_b[r] * amps.c_b[c].conj()) * scale
    });
    let eig = rho.symmetric_eigenvalues();
    let mut out: Vec<f64> = eig.iter().copied().filter(|&l| l > cutoff).collect();
    out.sort_by(|a, b| a.total_cmp(b));
    Ok(out)
}

/// Entropy, phases and Bell weights over interaction time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntanglementReport {
    pub times: Vec<f64>,
    pub entropy: Vec<f64>,
    /// `None` where the doublet is not yet resolved.
    pub phase_minus: Vec<Option<f64>>,
    pub phase_plus: Vec<Option<f64>>,
    pub bell_minus: Vec<f64>,
    pub bell_plus: Vec<f64>,
    pub p_ion: Vec<f64>,
    pub eigenvalues: Vec<[f64; 2]>,
}

impl EntanglementReport {
    pub fn bell_overlaps(&self) -> (&[f64], &[f64]) {
        (&self.bell_minus, &self.bell_plus)
    }
}

struct TracePoint {
    entropy: f64,
    phases: Option<(f64, f64)>,
    bell: (f64, f64),
    p_ion: f64,
    eigenvalues: [f64; 2],
}

/// One spectrum per time, evaluated in parallel and assembled in order.
pub fn entropy_trace(
    pulse: &PulseSpec,
    atom: &AtomicSystem,
    grid: &SpectralGrid,
    times: &[f64],
) -> Result<EntanglementReport> {
    entropy_trace_with(pulse, atom, grid, times, &QuadratureOptions::default())
}

pub fn entropy_trace_with(
    pulse: &PulseSpec,
    atom: &AtomicSystem,
    grid: &SpectralGrid,
    times: &[f64],
    opts: &QuadratureOptions,
) -> Result<EntanglementReport> {
    let rabi = crate::model::rabi_frequency(pulse, atom);
    let points: Vec<TracePoint> = times
        .par_iter()
        .map(|&t| -> Result<TracePoint> {
            let amps = spectra::channel_amplitudes_with(pulse, atom, grid, t, opts)?;
            let rho = match reduced_ion_density_matrix(&amps) {
                Ok(r) => r,
                Err(Error::NoIonization) => {
                    return Ok(TracePoint {
                        entropy: 0.0,
                        phases: None,
                        bell: (0.0, 0.0),
                        p_ion: 0.0,
                        eigenvalues: [0.0, 1.0],
                    })
                }
                Err(e) => return Err(e),
            };
            let phases = match channel_phase_difference(&amps, rabi) {
                Ok(p) => Some(p),
                Err(Error::PeaksUnresolved { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(TracePoint {
                entropy: entropy(&rho)?,
                phases,
                bell: bell_overlap(&amps)?,
                p_ion: rho.p_ion,
                eigenvalues: rho.eigenvalues(),
            })
        })
        .collect::<Result<_>>()?;

    Ok(EntanglementReport {
        times: times.to_vec(),
        entropy: points.iter().map(|p| p.entropy).collect(),
        phase_minus: points.iter().map(|p| p.phases.map(|x| x.0)).collect(),
        phase_plus: points.iter().map(|p| p.phases.map(|x| x.1)).collect(),
        bell_minus: points.iter().map(|p| p.bell.0).collect(),
        bell_plus: points.iter().map(|p| p.bell.1).collect(),
        p_ion: points.iter().map(|p| p.p_ion).collect(),
        eigenvalues: points.iter().map(|p| p.eigenvalues).collect(),
    })
}

/// max − min of `values` over consecutive windows of length `period`
/// starting at `start`. Incomplete trailing windows are dropped.
pub fn window_modulation(times: &[f64], values: &[f64], period: f64, start: f64) -> Vec<f64> {
    let Some(&t_last) = times.last() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut lo = start;
    while lo + period <= t_last + 1e-9 * period {
        let window: Vec<f64> = times
            .iter()
            .zip(values)
            .filter(|(&t, _)| t >= lo && t <= lo + period)
            .map(|(_, &v)| v)
            .collect();
        if !window.is_empty() {
            let max = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = window.iter().cloned().fold(f64::INFINITY, f64::min);
            out.push(max - min);
        }
        lo += period;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amps_from(c_a: Vec<Complex64>, c_b: Vec<Complex64>) -> ChannelAmplitudes {
        let n = c_a.len();
        let grid = SpectralGrid::new(-1.0, 1.0, n).unwrap();
        ChannelAmplitudes::new(grid, c_a, c_b, 1.0, 0.0).unwrap()
    }

    fn gaussian(n: usize, center: f64, width: f64) -> Vec<Complex64> {
        (0..n)
            .map(|k| {
                let e = -1.0 + 2.0 * k as f64 / (n - 1) as f64;
                Complex64::new((-(e - center).powi(2) / (2.0 * width * width)).exp(), 0.0)
            })
            .collect()
    }

    #[test]
    fn entropy_reference_values() {
        assert_eq!(entropy(&ReducedIonDensity::diagonal(1.0, 0.0)).unwrap(), 0.0);
        assert!((entropy(&ReducedIonDensity::diagonal(0.5, 0.5)).unwrap() - 1.0).abs() < 1e-15);
        assert!((entropy(&ReducedIonDensity::diagonal(0.75, 0.25)).unwrap() - 0.811_278).abs() < 1e-6);
        assert!(matches!(
            entropy(&ReducedIonDensity::diagonal(1.1, -0.1)),
            Err(Error::NotPsd(_))
        ));
        assert_eq!(entropy(&ReducedIonDensity::diagonal(1.0, -1e-12)).unwrap(), 0.0);
    }

    #[test]
    fn single_channel_is_pure() {
        let n = 101;
        let a = amps_from(gaussian(n, 0.0, 0.1), vec![Complex64::new(0.0, 0.0); n]);
        let rho = reduced_ion_density_matrix(&a).unwrap();
        assert!((rho.matrix[0][0].re - 1.0).abs() < 1e-14);
        assert_eq!(entropy(&rho).unwrap(), 0.0);
        let (wm, wp) = bell_overlap(&a).unwrap();
        assert!((wm - 0.25).abs() < 1e-12 && (wp - 0.25).abs() < 1e-12);
    }

    #[test]
    fn proportional_channels_are_product() {
        let n = 101;
        let ca = gaussian(n, 0.1, 0.2);
        let lambda = Complex64::new(0.3, -0.7);
        let cb = ca.iter().map(|c| c * lambda).collect();
        let rho = reduced_ion_density_matrix(&amps_from(ca, cb)).unwrap();
        assert!(entropy(&rho).unwrap() < 1e-9);
    }

    #[test]
    fn bell_state_with_disjoint_peaks() {
        let n = 201;
        let i = Complex64::new(0.0, 1.0);
        let lo = gaussian(n, -0.5, 0.05);
        let hi = gaussian(n, 0.5, 0.05);
        let ca: Vec<Complex64> = lo.iter().zip(&hi).map(|(l, h)| l + h).collect();
        let cb: Vec<Complex64> = lo.iter().zip(&hi).map(|(l, h)| i * l - i * h).collect();
        let a = amps_from(ca, cb);
        let (wm, wp) = bell_overlap(&a).unwrap();
        assert!((wm - 0.5).abs() < 1e-12 && (wp - 0.5).abs() < 1e-12);
        let s = entropy(&reduced_ion_density_matrix(&a).unwrap()).unwrap();
        assert!((s - 1.0).abs() < 1e-9);
        let (pm, pp) = channel_phase_difference(&a, 0.0).unwrap();
        assert!((pm - PI / 2.0).abs() < 1e-9);
        assert!((pp + PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn zero_amplitudes_are_an_error() {
        let a = amps_from(vec![Complex64::new(0.0, 0.0); 11], vec![Complex64::new(0.0, 0.0); 11]);
        assert!(matches!(reduced_ion_density_matrix(&a), Err(Error::NoIonization)));
    }

    #[test]
    fn single_peak_is_unresolved() {
        let n = 101;
        let a = amps_from(gaussian(n, 0.0, 0.1), gaussian(n, 0.0, 0.1));
        assert!(matches!(
            channel_phase_difference(&a, 0.0),
            Err(Error::PeaksUnresolved { found: 1 })
        ));
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn dense_spectrum_matches_ion_side() {
        let n = 48;
        let i = Complex64::new(0.0, 1.0);
        let ca = gaussian(n, -0.3, 0.2);
        let cb: Vec<Complex64> = gaussian(n, 0.2, 0.15).iter().map(|c| c * i * 0.6).collect();
        let a = amps_from(ca, cb);
        let ion = reduced_ion_density_matrix(&a).unwrap().eigenvalues();
        let dense = photoelectron_density_eigenvalues(&a, 1e-12).unwrap();
        assert_eq!(dense.len(), 2);
        assert!((dense[0] - ion[0]).abs() < 1e-10 && (dense[1] - ion[1]).abs() < 1e-10);
    }

    #[test]
    fn window_modulation_of_sine() {
        let times: Vec<f64> = (0..=400).map(|k| k as f64 * 0.1).collect();
        let v: Vec<f64> = times.iter().map(|t| (2.0 * PI * t / 10.0).sin()).collect();
        let m = window_modulation(&times, &v, 10.0, 0.0);
        assert_eq!(m.len(), 4);
        assert!(m.iter().all(|x| (x - 2.0).abs() < 1e-3));
    }
}
