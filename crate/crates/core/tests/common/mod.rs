#![allow(dead_code)]

use std::f64::consts::PI;

use dressed_ion::model::{self, AtomicSystem, PulseSpec};
use dressed_ion::spectra::SpectralGrid;
use dressed_ion::units::HBAR_EV_FS;
use num_complex::Complex64;

/// Closed-form c_a, c_b (eV^{-1/2}) inside a flat-top pulse.
///
/// With constant coupling U(t, t') = e^{−iH(t−t')} = Σ± P± e^{∓iW(t−t')/2},
/// so every term of the t' integral is a plain exponential.
pub fn flat_top_amplitudes(
    pulse: &PulseSpec,
    atom: &AtomicSystem,
    grid: &SpectralGrid,
    t: f64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    assert!(t <= pulse.fwhm_duration);
    let omega = model::rabi_frequency(pulse, atom);
    let delta = pulse.detuning(atom);
    let w = omega.hypot(delta);
    let gamma = atom.ground_rate_per_fs(pulse);
    let kappa = (gamma / (2.0 * PI)).sqrt();
    let center = model::einstein_energy(pulse, atom) + 0.5 * HBAR_EV_FS * delta;
    let i = Complex64::new(0.0, 1.0);

    // (eigenvalue, first column of its projector)
    let modes: Vec<(f64, [Complex64; 2])> = if w == 0.0 {
        vec![(0.0, [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])]
    } else {
        [1.0, -1.0]
            .iter()
            .map(|&s| {
                // P = (I + s·2H/W)/2, H = ½[[Δ, −iΩ], [iΩ, −Δ]]
                let col = [
                    Complex64::new(0.5 * (1.0 + s * delta / w), 0.0),
                    0.5 * s * i * omega / w,
                ];
                (s * 0.5 * w, col)
            })
            .collect()
    };

    let mut c_a = Vec::with_capacity(grid.n_points);
    let mut c_b = Vec::with_capacity(grid.n_points);
    for e in grid.energies() {
        let d = (e - center) / HBAR_EV_FS;
        let mut acc = [Complex64::new(0.0, 0.0); 2];
        for (lambda, col) in &modes {
            let z = i * (d + lambda) - 0.5 * gamma;
            let integral = if z.norm() < 1e-300 { Complex64::new(t, 0.0) } else { ((z * t).exp() - 1.0) / z };
            let f = (-i * lambda * t).exp() * integral * kappa;
            acc[0] += col[0] * f;
            acc[1] += col[1] * f;
        }
        let to_ev = 1.0 / HBAR_EV_FS.sqrt();
        c_a.push(acc[0] * to_ev);
        c_b.push(acc[1] * to_ev);
    }
    (c_a, c_b)
}

/// max |x − y| / max |y|.
pub fn max_relative_error(x: &[Complex64], y: &[Complex64]) -> f64 {
    let scale = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
    x.iter().zip(y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale
}

pub fn resonant_pulse() -> PulseSpec {
    PulseSpec::flat_top(40.814, 1.25e13, 73.0).unwrap()
}
