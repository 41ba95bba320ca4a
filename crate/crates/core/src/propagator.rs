//! Rotating-frame dynamics of the two-level ion.
//!
//! Basis (|a⟩, |b⟩). With Δω = ω − ω_ba the Hamiltonian is
//!
//! ```text
//! H(t) = ½ [  Δω        −i Ω(t) ]
//!          [ i Ω(t)     −Δω     ]
//! ```
//!
//! so that for a constant coupling
//! a(τ) = cos(Wτ/2) − i(Δω/W) sin(Wτ/2) and b(τ) = (Ω/W) sin(Wτ/2).
//! Units are whatever the caller uses consistently (rad/fs with fs, or
//! atomic units).

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::PulseSpec;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[row][col]
    }

    pub fn column(&self, col: usize) -> [Complex64; 2] {
        [self.0[0][col], self.0[1][col]]
    }

    pub fn adjoint(&self) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn inverse(&self) -> Mat2 {
        let m = &self.0;
        let d = self.det();
        Mat2([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
    }

    pub fn scale(&self, s: Complex64) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    /// max |(M†M − 1)_ij|
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint() * *self;
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((p.0[r][c] - target).norm());
            }
        }
        worst
    }

    fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Mat2(out)
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, rhs: Mat2) -> Mat2 {
        let mut out = self.0;
        for r in 0..2 {
            for c in 0..2 {
                out[r][c] += rhs.0[r][c];
            }
        }
        Mat2(out)
    }
}

/// The driven two-level ion for one pulse.
#[derive(Debug, Clone, Copy)]
pub struct TwoLevelIon<'a> {
    pulse: &'a PulseSpec,
    /// Peak Ω in 1/[time].
    rabi_peak: f64,
    /// Δω in 1/[time].
    detuning: f64,
    /// Multiplies times before querying the pulse envelope (which is in fs).
    time_to_fs: f64,
}

impl<'a> TwoLevelIon<'a> {
    /// `rabi_peak` and `detuning` in rad/fs, times in fs.
    pub fn new(pulse: &'a PulseSpec, rabi_peak: f64, detuning: f64) -> Self {
        TwoLevelIon {
            pulse,
            rabi_peak,
            detuning,
            time_to_fs: 1.0,
        }
    }

    /// Frequencies in 1/[unit] where one [unit] is `time_to_fs` fs.
    pub fn with_time_unit(
        pulse: &'a PulseSpec,
        rabi_peak: f64,
        detuning: f64,
        time_to_fs: f64,
    ) -> Self {
        TwoLevelIon {
            pulse,
            rabi_peak,
            detuning,
            time_to_fs,
        }
    }

    /// H at time `t`; `probe` picks the side of an envelope discontinuity.
    pub fn hamiltonian_near(&self, t: f64, probe: f64) -> Mat2 {
        let omega = self.rabi_peak
            * self
                .pulse
                .field_envelope_near(t * self.time_to_fs, probe * self.time_to_fs);
        let half_d = Complex64::new(0.5 * self.detuning, 0.0);
        let half_o = Complex64::new(0.0, 0.5 * omega);
        Mat2([[half_d, -half_o], [half_o, -half_d]])
    }

    pub fn hamiltonian(&self, t: f64) -> Mat2 {
        self.hamiltonian_near(t, t)
    }

    /// Envelope breakpoints (in this system's time unit) inside `(t0, t1)`.
    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        self.pulse
            .breakpoints(f64::INFINITY)
            .into_iter()
            .map(|b| b / self.time_to_fs)
            .filter(|&b| b > t0 && b < t1)
            .collect()
    }

    /// Fastest dynamical rate, used for the initial step.
    fn max_rate(&self) -> f64 {
        self.rabi_peak.hypot(self.detuning).max(1e-300)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-12,
            atol: 1e-14,
            min_step: 1e-14,
            max_steps: 10_000_000,
        }
    }
}

// Dormand–Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn lin(terms: &[(f64, &Mat2)]) -> Mat2 {
    let mut out = Mat2::ZERO;
    for (c, m) in terms {
        out = out + m.scale(Complex64::new(*c, 0.0));
    }
    out
}

/// Adaptive Dormand–Prince integration of dU/dt = −iH(t)U on a smooth
/// stretch `[t0, t1]` (no envelope breakpoints inside).
fn integrate_smooth(
    ion: &TwoLevelIon<'_>,
    u0: Mat2,
    t0: f64,
    t1: f64,
    opts: &IntegratorOptions,
) -> Result<Mat2> {
    if t1 <= t0 {
        return Ok(u0);
    }
    let probe = 0.5 * (t0 + t1);
    let rhs = |t: f64, u: &Mat2| -> Mat2 {
        let h = ion.hamiltonian_near(t, probe);
        (h * *u).scale(-I)
    };

    let span = t1 - t0;
    let mut h = (0.1 / ion.max_rate()).min(span);
    let mut t = t0;
    let mut u = u0;
    let mut k1 = rhs(t, &u);
    let mut steps = 0usize;
    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        let k2 = rhs(t + C2 * h, &(u + lin(&[(h * A21, &k1)])));
        let k3 = rhs(t + C3 * h, &(u + lin(&[(h * A31, &k1), (h * A32, &k2)])));
        let k4 = rhs(
            t + C4 * h,
            &(u + lin(&[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)])),
        );
        let k5 = rhs(
            t + C5 * h,
            &(u + lin(&[
                (h * A51, &k1),
                (h * A52, &k2),
                (h * A53, &k3),
                (h * A54, &k4),
            ])),
        );
        let k6 = rhs(
            t + h,
            &(u + lin(&[
                (h * A61, &k1),
                (h * A62, &k2),
                (h * A63, &k3),
                (h * A64, &k4),
                (h * A65, &k5),
            ])),
        );
        let u_new = u + lin(&[
            (h * B1, &k1),
            (h * B3, &k3),
            (h * B4, &k4),
            (h * B5, &k5),
            (h * B6, &k6),
        ]);
        let k7 = rhs(t + h, &u_new);
        let err = lin(&[
            (h * E1, &k1),
            (h * E3, &k3),
            (h * E4, &k4),
            (h * E5, &k5),
            (h * E6, &k6),
            (h * E7, &k7),
        ]);
        let scale = opts.atol + opts.rtol * u.max_abs().max(u_new.max_abs());
        let err_norm = err.max_abs() / scale;

        if err_norm <= 1.0 {
            t += h;
            u = u_new;
            k1 = k7;
        }
        let factor = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        steps += 1;
        if t < t1 && (h < opts.min_step * (1.0 + t.abs()) || steps > opts.max_steps) {
            return Err(Error::StepUnderflow { t, step: h });
        }
    }
    Ok(u)
}

/// Advance `u0` from `t0` to `t1`, splitting at envelope breakpoints.
pub fn propagate(
    ion: &TwoLevelIon<'_>,
    u0: Mat2,
    t0: f64,
    t1: f64,
    opts: &IntegratorOptions,
) -> Result<Mat2> {
    let mut u = u0;
    let mut start = t0;
    for b in ion.breakpoints(t0, t1) {
        u = integrate_smooth(ion, u, start, b, opts)?;
        start = b;
    }
    integrate_smooth(ion, u, start, t1, opts)
}

/// U(t_end, t_start) for a pulse with peak Rabi frequency `rabi_peak` and
/// detuning `detuning` (rad/fs); times in fs.
pub fn two_level_propagator(
    pulse: &PulseSpec,
    rabi_peak: f64,
    detuning: f64,
    t_start: f64,
    t_end: f64,
) -> Result<Mat2> {
    if t_end < t_start {
        return Err(Error::Domain(format!(
            "t_end ({t_end}) must not precede t_start ({t_start})"
        )));
    }
    if rabi_peak < 0.0 {
        return Err(Error::Domain("rabi frequency must be >= 0".to_string()));
    }
    let ion = TwoLevelIon::new(pulse, rabi_peak, detuning);
    propagate(&ion, Mat2::IDENTITY, t_start, t_end, &IntegratorOptions::default())
}

/// Closed-form propagator for a constant coupling `rabi` over `tau`.
pub fn constant_coupling_propagator(rabi: f64, detuning: f64, tau: f64) -> Mat2 {
    let w = rabi.hypot(detuning);
    if w == 0.0 {
        return Mat2::IDENTITY;
    }
    let (s, c) = (0.5 * w * tau).sin_cos();
    let d = detuning / w;
    let o = rabi / w;
    Mat2([
        [Complex64::new(c, -d * s), Complex64::new(-o * s, 0.0)],
        [Complex64::new(o * s, 0.0), Complex64::new(c, d * s)],
    ])
}

/// U(t_k, t_0) at every node of `times`, integrated node to node.
#[derive(Debug, Clone)]
pub struct FundamentalMatrix {
    pub times: Vec<f64>,
    pub u: Vec<Mat2>,
}

impl FundamentalMatrix {
    pub fn compute(
        ion: &TwoLevelIon<'_>,
        times: &[f64],
        opts: &IntegratorOptions,
    ) -> Result<Self> {
        let mut u = Vec::with_capacity(times.len());
        let mut current = Mat2::IDENTITY;
        let mut prev = times.first().copied().unwrap_or(0.0);
        for &t in times {
            current = propagate(ion, current, prev, t, opts)?;
            u.push(current);
            prev = t;
        }
        Ok(FundamentalMatrix {
            times: times.to_vec(),
            u,
        })
    }

    /// U(t_j, t_k) = U(t_j, t_0) U(t_k, t_0)⁻¹.
    pub fn between(&self, j: usize, k: usize) -> Mat2 {
        self.u[j] * self.u[k].inverse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PulseSpec;
    use std::f64::consts::PI;

    fn flat(duration: f64) -> PulseSpec {
        PulseSpec::flat_top(40.814, 1.25e13, duration).unwrap()
    }

    #[test]
    fn zero_interval_is_identity() {
        let u = two_level_propagator(&flat(73.0), 0.58, 0.1, 10.0, 10.0).unwrap();
        assert_eq!(u, Mat2::IDENTITY);
    }

    #[test]
    fn pi_pulse_inverts() {
        let omega = 2.0 * PI / 10.8;
        let u = two_level_propagator(&flat(73.0), omega, 0.0, 0.0, 5.4).unwrap();
        assert!((u.get(1, 0).norm_sqr() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn quarter_period_splits_evenly() {
        let omega = 2.0 * PI / 10.8;
        let u = two_level_propagator(&flat(73.0), omega, 0.0, 0.0, 2.7).unwrap();
        assert!((u.get(0, 0).norm_sqr() - 0.5).abs() < 1e-9);
        assert!((u.get(1, 0).norm_sqr() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn short_time_b_is_real_positive() {
        let omega = 0.5;
        let u = two_level_propagator(&flat(73.0), omega, 0.0, 0.0, 1e-3).unwrap();
        let b = u.get(1, 0);
        assert!((b.re - (omega * 1e-3 / 2.0).sin()).abs() < 1e-12);
        assert!(b.im.abs() < 1e-12);
    }

    #[test]
    fn matches_closed_form_inside_flat_top() {
        for &(omega, det) in &[(0.58, 0.0), (0.58, 0.3), (0.2, -0.9), (1.3, 2.0)] {
            for &(t0, t1) in &[(0.0, 73.0), (3.1, 41.7), (20.0, 20.5)] {
                let u = two_level_propagator(&flat(73.0), omega, det, t0, t1).unwrap();
                let exact = constant_coupling_propagator(omega, det, t1 - t0);
                for r in 0..2 {
                    for c in 0..2 {
                        assert!(
                            (u.get(r, c) - exact.get(r, c)).norm() < 1e-9,
                            "omega {omega} det {det} [{t0},{t1}] err {:e}", (u.get(r, c) - exact.get(r, c)).norm()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn free_evolution_after_flat_top() {
        let omega = 0.58;
        let det = 0.2;
        let u = two_level_propagator(&flat(30.0), omega, det, 0.0, 50.0).unwrap();
        let expected =
            constant_coupling_propagator(0.0, det, 20.0) * constant_coupling_propagator(omega, det, 30.0);
        for r in 0..2 {
            for c in 0..2 {
                assert!((u.get(r, c) - expected.get(r, c)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_reversed_interval() {
        assert!(two_level_propagator(&flat(10.0), 0.5, 0.0, 5.0, 1.0).is_err());
    }

    #[test]
    fn fundamental_matrix_composition() {
        let pulse = PulseSpec::gaussian(40.9, 1.25e13, 30.0).unwrap();
        let ion = TwoLevelIon::new(&pulse, 0.6, 0.15);
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 3.0).collect();
        let fm = FundamentalMatrix::compute(&ion, &times, &IntegratorOptions::default()).unwrap();
        let direct = two_level_propagator(&pulse, 0.6, 0.15, times[7], times[33]).unwrap();
        let composed = fm.between(33, 7);
        for r in 0..2 {
            for c in 0..2 {
                assert!((direct.get(r, c) - composed.get(r, c)).norm() < 1e-9);
            }
        }
    }
}
