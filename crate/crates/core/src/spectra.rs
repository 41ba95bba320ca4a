//! Joint photoelectron–ion amplitudes and the spectra built from them.
//!
//! The amplitude of finding the ion in channel `i` with a photoelectron of
//! kinetic energy E at time t is
//!
//! ```text
//! c_i(t, E) = κ ∫₀ᵗ dt' ε(t') g(t') e^{iδ t'} U_ia(t, t'),   δ = E − E_mid
//! ```
//!
//! with E_mid = ħω − E_bin + ħΔω/2 and κ² = Γ/2π fixed by the neutral
//! ionization rate Γ. The t' integral is done by composite Filon quadrature:
//! the smooth factor ε g U is interpolated by cubic Hermite polynomials (its
//! t'-derivative is known exactly from dU(t,t')/dt' = U(t,t')·iH(t')) and the
//! oscillating phase e^{iδt'} is integrated analytically on each panel, so
//! the accuracy does not depend on how far E sits from the line centre.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, AtomicSystem, Envelope, PulseSpec};
use crate::peaks::{self, Peak};
use crate::propagator::{FundamentalMatrix, IntegratorOptions, TwoLevelIon};
use crate::units::{self, AU_TIME_FS, HARTREE_EV, HBAR_EV_FS};

/// Uniform kinetic-energy grid in eV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralGrid {
    pub e_min: f64,
    pub e_max: f64,
    pub n_points: usize,
}

impl Default for SpectralGrid {
    fn default() -> Self {
        SpectralGrid {
            e_min: 14.0,
            e_max: 18.5,
            n_points: 2001,
        }
    }
}

impl SpectralGrid {
    pub fn new(e_min: f64, e_max: f64, n_points: usize) -> Result<Self> {
        let g = SpectralGrid {
            e_min,
            e_max,
            n_points,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid of `n_points` centred on `center` with half-width `half_width`.
    pub fn centered(center: f64, half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(center - half_width, center + half_width, n_points)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_min < self.e_max) || !self.e_min.is_finite() || !self.e_max.is_finite() {
            return Err(Error::invalid("grid", "e_min must be < e_max"));
        }
        if self.n_points < 2 {
            return Err(Error::invalid("grid", "n_points must be >= 2"));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.e_max - self.e_min) / (self.n_points - 1) as f64
    }

    pub fn energy(&self, k: usize) -> f64 {
        self.e_min + k as f64 * self.spacing()
    }

    pub fn energies(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.energy(k)).collect()
    }
}

/// c_a(E), c_b(E) at one time, in eV^{-1/2}.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelAmplitudes {
    pub grid: SpectralGrid,
    pub c_a: Vec<Complex64>,
    pub c_b: Vec<Complex64>,
    /// fs
    pub time: f64,
    /// Spectrum midpoint ħω − E_bin + ħΔω/2, eV.
    pub center: f64,
}

impl ChannelAmplitudes {
    pub fn new(
        grid: SpectralGrid,
        c_a: Vec<Complex64>,
        c_b: Vec<Complex64>,
        time: f64,
        center: f64,
    ) -> Result<Self> {
        if c_a.len() != grid.n_points || c_b.len() != grid.n_points {
            return Err(Error::AxisMismatch(format!(
                "amplitude lengths {}/{} differ from grid size {}",
                c_a.len(),
                c_b.len(),
                grid.n_points
            )));
        }
        Ok(ChannelAmplitudes {
            grid,
            c_a,
            c_b,
            time,
            center,
        })
    }

    pub fn population_a(&self) -> f64 {
        self.c_a.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn population_b(&self) -> f64 {
        self.c_b.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    /// Ionization probability Σ(|c_a|² + |c_b|²)·ΔE.
    pub fn p_ion(&self) -> f64 {
        self.population_a() + self.population_b()
    }

    /// Multiply both channels by a common factor.
    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.c_a.iter_mut().for_each(|c| *c *= s);
        out.c_b.iter_mut().for_each(|c| *c *= s);
        out
    }
}

/// Quadrature controls for the t' integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureOptions {
    /// Nodes per shortest dynamical period (2π/W, envelope FWHM, depletion).
    pub points_per_period: usize,
    #[serde(skip)]
    pub integrator: IntegratorOptions,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            points_per_period: 64,
            integrator: IntegratorOptions::default(),
        }
    }
}

impl QuadratureOptions {
    pub fn with_points_per_period(mut self, n: usize) -> Self {
        self.points_per_period = n;
        self
    }
}

/// Constants of one (pulse, atom) run in atomic units.
struct Kernel<'a> {
    pulse: &'a PulseSpec,
    ion: TwoLevelIon<'a>,
    rabi_au: f64,
    detuning_au: f64,
    /// Γ per fs.
    gamma_fs: f64,
    center_ev: f64,
}

impl<'a> Kernel<'a> {
    fn new(pulse: &'a PulseSpec, atom: &AtomicSystem) -> Result<Self> {
        pulse.validate()?;
        atom.validate()?;
        let rabi_au = model::rabi_frequency(pulse, atom) * AU_TIME_FS;
        let detuning_au = pulse.detuning(atom) * AU_TIME_FS;
        let center_ev = model::einstein_energy(pulse, atom)
            + 0.5 * HBAR_EV_FS * pulse.detuning(atom);
        Ok(Kernel {
            pulse,
            ion: TwoLevelIon::with_time_unit(pulse, rabi_au, detuning_au, AU_TIME_FS),
            rabi_au,
            detuning_au,
            gamma_fs: atom.ground_rate_per_fs(pulse),
            center_ev,
        })
    }

    fn gamma_au(&self) -> f64 {
        self.gamma_fs * AU_TIME_FS
    }

    /// g(t) with t in a.u.
    fn ground(&self, t_au: f64) -> f64 {
        (-0.5 * self.gamma_fs * self.pulse.intensity_integral(t_au * AU_TIME_FS)).exp()
    }

    /// Piecewise-uniform panels covering [0, t] in a.u.
    fn segments(&self, t_au: f64, points_per_period: usize, even: bool) -> Vec<Segment> {
        let ppp = points_per_period.max(4) as f64;
        let mut h_target = f64::INFINITY;
        let w = self.rabi_au.hypot(self.detuning_au);
        if w > 0.0 {
            h_target = h_target.min(2.0 * PI / w / ppp);
        }
        if self.pulse.envelope == Envelope::Gaussian {
            h_target = h_target.min(units::fs_to_au(self.pulse.fwhm_duration) / ppp);
        }
        let half_rate = 0.5 * self.gamma_au();
        if half_rate > 0.0 {
            h_target = h_target.min(2.0 * PI / half_rate / ppp);
        }

        let mut edges = vec![0.0];
        edges.extend(
            self.pulse
                .breakpoints(units::au_to_fs(t_au))
                .into_iter()
                .map(units::fs_to_au),
        );
        edges.push(t_au);
        edges
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                let len = w[1] - w[0];
                let mut n = ((len / h_target).ceil() as usize).max(4);
                if even && n % 2 == 1 {
                    n += 1;
                }
                Segment {
                    start: w[0],
                    h: len / n as f64,
                    n,
                    probe: 0.5 * (w[0] + w[1]),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    start: f64,
    h: f64,
    n: usize,
    probe: f64,
}

impl Segment {
    fn node(&self, j: usize) -> f64 {
        self.start + j as f64 * self.h
    }
}

/// Fundamental matrix over the nodes of every segment (boundary nodes appear
/// once per segment).
fn segment_propagators(
    kernel: &Kernel<'_>,
    segments: &[Segment],
    opts: &IntegratorOptions,
) -> Result<(Vec<Vec<f64>>, FundamentalMatrix)> {
    let node_times: Vec<Vec<f64>> = segments
        .iter()
        .map(|s| (0..=s.n).map(|j| s.node(j)).collect())
        .collect();
    let flat: Vec<f64> = node_times.iter().flatten().copied().collect();
    let fm = FundamentalMatrix::compute(&kernel.ion, &flat, opts)?;
    Ok((node_times, fm))
}

/// ∫₀¹ sⁿ e^{iθs} ds for n = 0..=3.
fn phase_moments(theta: f64) -> [Complex64; 4] {
    let i = Complex64::new(0.0, 1.0);
    if theta.abs() < 0.5 {
        let mut m = [Complex64::new(0.0, 0.0); 4];
        let mut term = Complex64::new(1.0, 0.0); // (iθ)^k / k!
        for k in 0..24 {
            for (n, mn) in m.iter_mut().enumerate() {
                *mn += term / (n + k + 1) as f64;
            }
            term *= i * theta / (k + 1) as f64;
        }
        m
    } else {
        let e = Complex64::new(theta.cos(), theta.sin());
        let it = i * theta;
        let m0 = (e - 1.0) / it;
        let m1 = (e - m0) / it;
        let m2 = (e - 2.0 * m1) / it;
        let m3 = (e - 3.0 * m2) / it;
        [m0, m1, m2, m3]
    }
}

/// Weights of (f₀, h f₀', f₁, h f₁') for ∫₀¹ e^{iθs} p(s) ds with p the
/// cubic Hermite interpolant.
fn hermite_filon_weights(theta: f64) -> [Complex64; 4] {
    let [m0, m1, m2, m3] = phase_moments(theta);
    [
        m0 - 3.0 * m2 + 2.0 * m3,
        m1 - 2.0 * m2 + m3,
        3.0 * m2 - 2.0 * m3,
        m3 - m2,
    ]
}

/// c_a, c_b (eV^{-1/2}) at time `t` (fs) on `grid`.
pub fn channel_amplitudes(
    pulse: &PulseSpec,
    atom: &AtomicSystem,
    grid: &SpectralGrid,
    t: f64,
) -> Result<ChannelAmplitudes> {
    channel_amplitudes_with(pulse, atom, grid, t, &QuadratureOptions::default())
}

pub fn channel_amplitudes_with(
    pulse: &PulseSpec,
    atom: &AtomicSystem,
    grid: &SpectralGrid,
    t: f64,
    opts: &QuadratureOptions,
) -> Result<ChannelAmplitudes> {
    grid.validate()?;
    let kernel = Kernel::new(pulse, atom)?;
    if !(t >= 0.0 && t <= pulse.total_window * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!(
            "time {t} fs outside the pulse window [0, {}]",
            pulse.total_window
        )));
    }
    check_clipping(pulse, atom, grid)?;

    let n_e = grid.n_points;
    let zeros = vec![Complex64::new(0.0, 0.0); n_e];
    if t == 0.0 || kernel.gamma_fs == 0.0 {
        return ChannelAmplitudes::new(*grid, zeros.clone(), zeros, t, kernel.center_ev);
    }

    let t_au = units::fs_to_au(t);
    let segments = kernel.segments(t_au, opts.points_per_period, false);
    let (node_times, fm) = segment_propagators(&kernel, &segments, &opts.integrator)?;
    let u_final = *fm.u.last().expect("at least one node");
    let kappa = (kernel.gamma_au() / (2.0 * PI)).sqrt();
    let i = Complex64::new(0.0, 1.0);

    // f and f' at each node, per segment, per channel
    let mut panels: Vec<(Segment, Vec<[Complex64; 2]>, Vec<[Complex64; 2]>)> = Vec::new();
    let mut flat_index = 0;
    for (seg, times) in segments.iter().zip(&node_times) {
        let mut f = Vec::with_capacity(times.len());
        let mut fd = Vec::with_capacity(times.len());
        for &tj in times {
            let v = u_final * fm.u[flat_index].inverse();
            flat_index += 1;
            let vh = v * kernel.ion.hamiltonian_near(tj, seg.probe);
            let t_fs = tj * AU_TIME_FS;
            let eps = pulse.field_envelope_near(t_fs, seg.probe * AU_TIME_FS);
            let deps = pulse.field_envelope_derivative(t_fs) * AU_TIME_FS;
            let g = kernel.ground(tj);
            let dg = -0.5 * kernel.gamma_au() * eps * eps * g;
            let amp = kappa * eps * g;
            let amp_d = kappa * (deps * g + eps * dg);
            let mut fj = [Complex64::new(0.0, 0.0); 2];
            let mut fdj = [Complex64::new(0.0, 0.0); 2];
            for ch in 0..2 {
                fj[ch] = amp * v.get(ch, 0);
                fdj[ch] = amp_d * v.get(ch, 0) + amp * i * vh.get(ch, 0);
            }
            f.push(fj);
            fd.push(fdj);
        }
        panels.push((*seg, f, fd));
    }

    let center_au = units::ev_to_hartree(kernel.center_ev);
    let to_ev_norm = 1.0 / HARTREE_EV.sqrt();
    let mut c_a = zeros.clone();
    let mut c_b = zeros;
    for k in 0..n_e {
        let delta = units::ev_to_hartree(grid.energy(k)) - center_au;
        let mut acc = [Complex64::new(0.0, 0.0); 2];
        for (seg, f, fd) in &panels {
            let h = seg.h;
            let w = hermite_filon_weights(delta * h);
            let step = Complex64::from_polar(1.0, delta * h);
            let mut rot = Complex64::new(0.0, 0.0);
            for j in 0..seg.n {
                if j % 32 == 0 {
                    rot = Complex64::from_polar(1.0, delta * seg.node(j));
                }
                for ch in 0..2 {
                    let panel = w[0] * f[j][ch]
                        + w[1] * h * fd[j][ch]
                        + w[2] * f[j + 1][ch]
                        + w[3] * h * fd[j + 1][ch];
                    acc[ch] += rot * panel * h;
                }
                rot *= step;
            }
        }
        c_a[k] = acc[0] * to_ev_norm;
        c_b[k] = acc[1] * to_ev_norm;
    }
    ChannelAmplitudes::new(*grid, c_a, c_b, t, kernel.center_ev)
}

/// Amplitudes once the pulse is over (flat top: t = Δt; Gaussian: end of window).
pub fn end_of_pulse_amplitudes(
    pulse: &PulseSpec,
    atom: &AtomicSystem,
    grid: &SpectralGrid,
) -> Result<ChannelAmplitudes> {
    channel_amplitudes(pulse, atom, grid, pulse.end_of_pulse())
}

fn check_clipping(pulse: &PulseSpec, atom: &AtomicSystem, grid: &SpectralGrid) -> Result<()> {
    let rabi = model::rabi_frequency(pulse, atom);
    let (lo, hi) = model::dressed_kinetic_energies(pulse, atom, rabi)?;
    let margin = 3.0 * grid.spacing();
    for e in [lo, hi] {
        if e < grid.e_min + margin || e > grid.e_max - margin {
            return Err(Error::GridClipping {
                energy_ev: e,
                e_min: grid.e_min,
                e_max: grid.e_max,
            });
        }
    }
    Ok(())
}

/// P(E) = |c_a(E)|² + |c_b(E)|².
pub fn photoelectron_spectrum(amps: &ChannelAmplitudes) -> Vec<f64> {
    amps.c_a
        .iter()
        .zip(&amps.c_b)
        .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
        .collect()
}

/// Ionic populations over time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationTrace {
    pub times: Vec<f64>,
    pub p_a: Vec<f64>,
    pub p_b: Vec<f64>,
    pub p_total: Vec<f64>,
    pub p_ground: Vec<f64>,
}

/// p_i(t) = ∫|c_i(t,E)|² dE over the whole line, evaluated through
/// Parseval's identity as Γ ∫₀ᵗ ε² g² |U_ia(t,t')|² dt'.
pub fn population_trace(
    pulse: &PulseSpec,
    atom: &AtomicSystem,
    times: &[f64],
) -> Result<PopulationTrace> {
    population_trace_with(pulse, atom, times, &QuadratureOptions::default())
}

pub fn population_trace_with(
    pulse: &PulseSpec,
    atom: &AtomicSystem,
    times: &[f64],
    opts: &QuadratureOptions,
) -> Result<PopulationTrace> {
    let kernel = Kernel::new(pulse, atom)?;
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("times must be sorted".to_string()));
    }
    if let Some(&t) = times.iter().find(|&&t| t < 0.0 || t > pulse.total_window * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("time {t} fs outside the pulse window")));
    }

    let rows: Vec<[f64; 3]> = times
        .par_iter()
        .map(|&t| -> Result<[f64; 3]> {
            let t_au = units::fs_to_au(t);
            let g_end = kernel.ground(t_au);
            if t == 0.0 || kernel.gamma_fs == 0.0 {
                return Ok([0.0, 0.0, g_end * g_end]);
            }
            let segments = kernel.segments(t_au, opts.points_per_period, true);
            let (node_times, fm) = segment_propagators(&kernel, &segments, &opts.integrator)?;
            let u_final = *fm.u.last().expect("at least one node");
            let mut pops = [0.0; 2];
            let mut flat_index = 0;
            for (seg, nodes) in segments.iter().zip(&node_times) {
                for (j, &tj) in nodes.iter().enumerate() {
                    let v = u_final * fm.u[flat_index].inverse();
                    flat_index += 1;
                    let eps = pulse.field_envelope_near(tj * AU_TIME_FS, seg.probe * AU_TIME_FS);
                    let g = kernel.ground(tj);
                    let simpson = if j == 0 || j == seg.n {
                        1.0
                    } else if j % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    let w = simpson * seg.h / 3.0 * eps * eps * g * g;
                    for (ch, p) in pops.iter_mut().enumerate() {
                        *p += w * v.get(ch, 0).norm_sqr();
                    }
                }
            }
            let gamma = kernel.gamma_au();
            Ok([gamma * pops[0], gamma * pops[1], g_end * g_end])
        })
        .collect::<Result<_>>()?;

    Ok(PopulationTrace {
        times: times.to_vec(),
        p_a: rows.iter().map(|r| r[0]).collect(),
        p_b: rows.iter().map(|r| r[1]).collect(),
        p_total: rows.iter().map(|r| r[0] + r[1]).collect(),
        p_ground: rows.iter().map(|r| r[2]).collect(),
    })
}

/// Sign changes of p_a − p_b, ignoring any within `0.05 * rabi_period` of the
/// previous counted one. Reaching zero after a definite sign counts once.
pub fn crossing_count(trace: &PopulationTrace, rabi_period: f64) -> usize {
    let diff: Vec<f64> = trace.p_a.iter().zip(&trace.p_b).map(|(a, b)| a - b).collect();
    let scale = diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if scale == 0.0 {
        return 0;
    }
    let tol = 1e-12 * scale;
    let debounce = 0.05 * rabi_period;
    let mut count = 0;
    let mut sign: Option<bool> = None;
    let mut last_cross: Option<f64> = None;
    let mut register = |t: f64, count: &mut usize| {
        if last_cross.map_or(true, |lc| t - lc >= debounce) {
            *count += 1;
            last_cross = Some(t);
        }
    };
    for (&t, &d) in trace.times.iter().zip(&diff) {
        if d.abs() <= tol {
            if sign.is_some() {
                register(t, &mut count);
                sign = None;
            }
            continue;
        }
        let positive = d > 0.0;
        if let Some(s) = sign {
            if s != positive {
                register(t, &mut count);
            }
        }
        sign = Some(positive);
    }
    count
}

/// Least-squares line y = slope·x + intercept and its R².
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let sxx: f64 = x[..n].iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y[..n].iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope, my - slope * mx, r2))
}

/// R² of a straight-line fit to p_total over `[t_lo, t_hi]`.
pub fn yield_linearity(trace: &PopulationTrace, t_lo: f64, t_hi: f64) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = trace
        .times
        .iter()
        .zip(&trace.p_total)
        .filter(|(&t, _)| t >= t_lo && t <= t_hi)
        .map(|(&t, &p)| (t, p))
        .unzip();
    linear_fit(&x, &y).map(|f| f.2)
}

/// Photoelectron intensity over (photon energy, kinetic energy).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumMap {
    pub photon_energies: Vec<f64>,
    pub kinetic_energies: Vec<f64>,
    /// Row-major, one row per photon energy.
    pub intensity: Vec<f64>,
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl SpectrumMap {
    pub fn new(
        photon_energies: Vec<f64>,
        kinetic_energies: Vec<f64>,
        intensity: Vec<f64>,
    ) -> Result<Self> {
        if intensity.len() != photon_energies.len() * kinetic_energies.len() {
            return Err(Error::AxisMismatch(format!(
                "intensity has {} cells, axes need {}x{}",
                intensity.len(),
                photon_energies.len(),
                kinetic_energies.len()
            )));
        }
        if let Some(k) = intensity.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        if intensity.iter().any(|&v| v < 0.0) {
            return Err(Error::Domain("spectrum map entries must be >= 0".to_string()));
        }
        Ok(SpectrumMap {
            photon_energies,
            kinetic_energies,
            intensity,
            meta: BTreeMap::new(),
        })
    }

    pub fn from_rows(
        photon_energies: Vec<f64>,
        kinetic_energies: Vec<f64>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        Self::new(photon_energies, kinetic_energies, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.photon_energies.len()
    }

    pub fn n_cols(&self) -> usize {
        self.kinetic_energies.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n_cols();
        &self.intensity[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.intensity.chunks(self.n_cols().max(1))
    }

    /// Uniform grid spanning the kinetic axis.
    pub fn grid(&self) -> Result<SpectralGrid> {
        let n = self.kinetic_energies.len();
        if n < 2 {
            return Err(Error::AxisMismatch("kinetic axis needs >= 2 points".to_string()));
        }
        SpectralGrid::new(self.kinetic_energies[0], self.kinetic_energies[n - 1], n)
    }

    pub fn same_axes(&self, other: &SpectrumMap) -> bool {
        self.photon_energies == other.photon_energies
            && self.kinetic_energies == other.kinetic_energies
    }

    pub fn max(&self) -> f64 {
        self.intensity.iter().cloned().fold(0.0, f64::max)
    }

    pub fn with_meta(mut self, key: &str, value: serde_json::Value) -> Self {
        self.meta.insert(key.to_string(), value);
        self
    }
}

/// End-of-pulse spectra for every photon energy, computed in parallel and
/// assembled in input order.
pub fn photon_energy_scan(
    pulse_template: &PulseSpec,
    atom: &AtomicSystem,
    grid: &SpectralGrid,
    photon_energies: &[f64],
) -> Result<SpectrumMap> {
    photon_energy_scan_with(pulse_template, atom, grid, photon_energies, &QuadratureOptions::default())
}

pub fn photon_energy_scan_with(
    pulse_template: &PulseSpec,
    atom: &AtomicSystem,
    grid: &SpectralGrid,
    photon_energies: &[f64],
    opts: &QuadratureOptions,
) -> Result<SpectrumMap> {
    if photon_energies.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("photon energies must be sorted".to_string()));
    }
    let rows: Vec<Vec<f64>> = photon_energies
        .par_iter()
        .map(|&hw| {
            let pulse = pulse_template.with_photon_energy(hw);
            channel_amplitudes_with(&pulse, atom, grid, pulse.end_of_pulse(), opts)
                .map(|a| photoelectron_spectrum(&a))
        })
        .collect::<Result<_>>()?;
    SpectrumMap::from_rows(photon_energies.to_vec(), grid.energies(), rows)
}

/// Dominant peaks of one map row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ridge {
    pub photon_energy: f64,
    pub lower: f64,
    /// `None` when only one peak clears the threshold.
    pub upper: Option<f64>,
}

impl Ridge {
    pub fn gap(&self) -> Option<f64> {
        self.upper.map(|u| u - self.lower)
    }
}

/// Ridge positions row by row; rows without any peak are skipped.
pub fn ridges(map: &SpectrumMap, rel_threshold: f64) -> Result<Vec<Ridge>> {
    let grid = map.grid()?;
    let mid = 0.5 * (grid.e_min + grid.e_max);
    Ok(map
        .rows()
        .zip(&map.photon_energies)
        .filter_map(|(row, &hw)| {
            let found: Vec<Peak> = peaks::find_peaks(row, grid.e_min, grid.spacing(), rel_threshold);
            match peaks::dominant_pair(&found, mid) {
                Some((lo, hi)) => Some(Ridge {
                    photon_energy: hw,
                    lower: lo.position,
                    upper: Some(hi.position),
                }),
                None => found.first().map(|p| Ridge {
                    photon_energy: hw,
                    lower: p.position,
                    upper: None,
                }),
            }
        })
        .collect())
}

/// Shell intensities, uniformly spaced on [f·I_peak, I_peak].
pub fn shell_intensities(i_peak: f64, n_shells: usize, i_min_fraction: f64) -> Vec<f64> {
    if n_shells <= 1 {
        return vec![i_peak];
    }
    let lo = i_min_fraction * i_peak;
    let step = (i_peak - lo) / (n_shells - 1) as f64;
    (0..n_shells).map(|k| lo + k as f64 * step).collect()
}

/// Normalized weights ∝ 1/I_k (2D Gaussian transverse profile, thin target).
pub fn shell_weights(intensities: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = intensities.iter().map(|&i| 1.0 / i).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Focal-volume average of the maps produced by `map_builder` at each shell intensity.
pub fn volume_average<F>(
    map_builder: F,
    i_peak: f64,
    n_shells: usize,
    i_min_fraction: f64,
) -> Result<SpectrumMap>
where
    F: Fn(f64) -> Result<SpectrumMap> + Sync,
{
    if n_shells == 0 {
        return Err(Error::invalid("n_shells", "must be >= 1"));
    }
    if !(i_min_fraction > 0.0 && i_min_fraction < 1.0) {
        return Err(Error::invalid("i_min_fraction", "must lie in (0, 1)"));
    }
    if !(i_peak > 0.0) {
        return Err(Error::invalid("i_peak", "must be > 0"));
    }
    let intensities = shell_intensities(i_peak, n_shells, i_min_fraction);
    let weights = shell_weights(&intensities);
    let maps: Vec<SpectrumMap> = intensities
        .par_iter()
        .map(|&i| map_builder(i))
        .collect::<Result<_>>()?;

    let first = &maps[0];
    let mut acc = vec![0.0; first.intensity.len()];
    for (map, w) in maps.iter().zip(&weights) {
        if !map.same_axes(first) {
            return Err(Error::AxisMismatch("shell maps have different axes".to_string()));
        }
        for (a, v) in acc.iter_mut().zip(&map.intensity) {
            *a += w * v;
        }
    }
    Ok(SpectrumMap::new(
        first.photon_energies.clone(),
        first.kinetic_energies.clone(),
        acc,
    )?
    .with_meta("volume_average_shells", serde_json::json!(n_shells))
    .with_meta("volume_average_i_min_fraction", serde_json::json!(i_min_fraction))
    .with_meta("volume_average_geometry", serde_json::json!("thin-jet 2D Gaussian (weights 1/I)")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AtomicSystem;

    #[test]
    fn moments_agree_across_branches() {
        for theta in [0.49, 0.5, 0.51] {
            let m = phase_moments(theta);
            // brute-force Simpson
            let n = 20_000;
            for (p, mp) in m.iter().enumerate() {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..=n {
                    let x = k as f64 / n as f64;
                    let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                    s += w * x.powi(p as i32) * Complex64::from_polar(1.0, theta * x);
                }
                s /= 3.0 * n as f64;
                assert!((s - mp).norm() < 1e-13, "theta {theta} n {p}");
            }
        }
    }

    #[test]
    fn grid_basics() {
        let g = SpectralGrid::new(14.0, 18.5, 2001).unwrap();
        assert!((g.spacing() - 0.00225).abs() < 1e-15);
        assert_eq!(g.energy(2000), 18.5);
        assert!(SpectralGrid::new(1.0, 1.0, 10).is_err());
        assert!(SpectralGrid::new(1.0, 2.0, 1).is_err());
    }

    #[test]
    fn zero_time_gives_zero_amplitudes() {
        let pulse = PulseSpec::flat_top(40.814, 1.25e13, 73.0).unwrap();
        let a = channel_amplitudes(&pulse, &AtomicSystem::helium(), &SpectralGrid::default(), 0.0)
            .unwrap();
        assert!(a.c_a.iter().chain(&a.c_b).all(|c| c.norm() == 0.0));
        assert_eq!(a.p_ion(), 0.0);
    }

    #[test]
    fn narrow_grid_is_clipping() {
        let pulse = PulseSpec::flat_top(40.814, 1.25e13, 73.0).unwrap();
        let grid = SpectralGrid::new(16.0, 16.4, 401).unwrap();
        assert!(matches!(
            channel_amplitudes(&pulse, &AtomicSystem::helium(), &grid, 73.0),
            Err(Error::GridClipping { .. })
        ));
    }

    #[test]
    fn time_outside_window_rejected() {
        let pulse = PulseSpec::flat_top(40.814, 1.25e13, 73.0).unwrap();
        assert!(channel_amplitudes(&pulse, &AtomicSystem::helium(), &SpectralGrid::default(), 80.0)
            .is_err());
    }

    #[test]
    fn crossing_count_of_synthetic_traces() {
        let t_r = 10.0;
        let times: Vec<f64> = (0..=3000).map(|k| k as f64 * 3.0 * t_r / 3000.0).collect();
        let mk = |pa: Vec<f64>, pb: Vec<f64>| PopulationTrace {
            times: times.clone(),
            p_total: pa.iter().zip(&pb).map(|(a, b)| a + b).collect(),
            p_ground: vec![1.0; times.len()],
            p_a: pa,
            p_b: pb,
        };
        let flat = mk(vec![0.3; times.len()], vec![0.1; times.len()]);
        assert_eq!(crossing_count(&flat, t_r), 0);
        let equal = mk(vec![0.2; times.len()], vec![0.2; times.len()]);
        assert_eq!(crossing_count(&equal, t_r), 0);
        let sine = mk(
            times.iter().map(|t| (2.0 * PI * t / t_r).sin()).collect(),
            vec![0.0; times.len()],
        );
        assert_eq!(crossing_count(&sine, t_r), 6);
        // jitter around a crossing is debounced
        let mut jitter: Vec<f64> = times.iter().map(|t| (2.0 * PI * t / t_r).sin()).collect();
        jitter[503] = 1e-3;
        jitter[504] = -1e-3;
        let noisy = mk(jitter, vec![0.0; times.len()]);
        assert_eq!(crossing_count(&noisy, t_r), 6);
    }

    #[test]
    fn shell_weight_law() {
        let w = shell_weights(&[1.0, 0.5]);
        assert!((w[1] / w[0] - 2.0).abs() < 1e-15);
        let i = shell_intensities(1e13, 32, 0.02);
        assert_eq!(i.len(), 32);
        assert!((i[0] - 2e11).abs() < 1.0);
        assert!((i[31] - 1e13).abs() < 1.0);
        let sum: f64 = shell_weights(&i).iter().sum();
        assert!((sum - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spectrum_map_validation() {
        assert!(SpectrumMap::new(vec![1.0], vec![1.0, 2.0], vec![0.0]).is_err());
        assert!(SpectrumMap::new(vec![1.0], vec![1.0, 2.0], vec![0.0, -1.0]).is_err());
        assert!(SpectrumMap::new(vec![1.0], vec![1.0, 2.0], vec![0.0, f64::NAN]).is_err());
        let m = SpectrumMap::new(vec![1.0, 2.0], vec![1.0, 2.0], vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.row(1), &[2.0, 3.0]);
    }
}
