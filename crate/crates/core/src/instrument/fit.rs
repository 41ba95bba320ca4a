//! Einstein line + doublet Voigt fit.
//!
//! The three line areas enter linearly and are eliminated by non-negative
//! least squares at every evaluation; Levenberg–Marquardt runs over the seven
//! remaining shape parameters, each mapped through a smooth transform that
//! enforces its bounds.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::voigt::{voigt_profile, VoigtPeak};
use crate::error::{Error, Result};
use crate::model::{self, AtomicSystem, PulseSpec};

const EINSTEIN_WINDOW: f64 = 0.05;
const MIN_OFFSET_HINT: f64 = 0.02;
const OFFSET_MIN_FACTOR: f64 = 0.25;
const OFFSET_MAX_FACTOR: f64 = 2.0;
const MIN_LOG_WIDTH: f64 = -13.815_510_557_964_274; // ln 1e-6
const TIE_TOLERANCE: f64 = 1e-9;

/// Starting point and budget of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeHints {
    /// Predicted Einstein line ħω − E_bin, eV.
    pub einstein_center: f64,
    pub doublet_lower: f64,
    pub doublet_upper: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub n_starts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl DecomposeHints {
    pub fn new(einstein_center: f64, doublet_lower: f64, doublet_upper: f64) -> Self {
        DecomposeHints {
            einstein_center,
            doublet_lower,
            doublet_upper,
            sigma: 0.02,
            gamma: 0.01,
            n_starts: 5,
            max_iter: 200,
            seed: 0,
        }
    }

    /// Hints from the dressed-state energies of `pulse`.
    pub fn from_model(pulse: &PulseSpec, atom: &AtomicSystem) -> Result<Self> {
        let rabi = model::rabi_frequency(pulse, atom);
        let (lo, hi) = model::dressed_kinetic_energies(pulse, atom, rabi)?;
        Ok(Self::new(model::einstein_energy(pulse, atom), lo, hi))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_widths(mut self, sigma: f64, gamma: f64) -> Self {
        self.sigma = sigma;
        self.gamma = gamma;
        self
    }

    fn offset_hints(&self) -> (f64, f64) {
        (
            (self.einstein_center - self.doublet_lower).max(MIN_OFFSET_HINT),
            (self.doublet_upper - self.einstein_center).max(MIN_OFFSET_HINT),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub einstein_line: VoigtPeak,
    /// (lower, upper)
    pub doublet: (VoigtPeak, VoigtPeak),
    pub entangled_fraction: f64,
    /// ‖model − data‖ / ‖data‖
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl DecompositionResult {
    pub fn doublet_asymmetry(&self) -> f64 {
        let lo = self.einstein_line.center - self.doublet.0.center;
        let hi = self.doublet.1.center - self.einstein_line.center;
        (lo - hi).abs()
    }

    /// Fitted model at `e`.
    pub fn eval(&self, e: f64) -> f64 {
        self.einstein_eval(e) + self.doublet_eval(e)
    }

    pub fn einstein_eval(&self, e: f64) -> f64 {
        super::voigt_eval(&self.einstein_line, e)
    }

    pub fn doublet_eval(&self, e: f64) -> f64 {
        super::voigt_eval(&self.doublet.0, e) + super::voigt_eval(&self.doublet.1, e)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(y: f64) -> f64 {
    (y / (1.0 - y)).ln()
}

/// Shape parameters decoded from the unconstrained vector.
#[derive(Debug, Clone, Copy)]
struct Shape {
    center: f64,
    sigma_e: f64,
    gamma_e: f64,
    lower: f64,
    upper: f64,
    sigma_d: f64,
    gamma_d: f64,
}

struct Problem<'a> {
    energies: Vec<f64>,
    y: &'a [f64],
    hints: DecomposeHints,
    offset_hints: (f64, f64),
}

impl<'a> Problem<'a> {
    fn decode(&self, p: &[f64]) -> Shape {
        let width = |q: f64| q.max(MIN_LOG_WIDTH).exp();
        let span = OFFSET_MAX_FACTOR - OFFSET_MIN_FACTOR;
        let center = self.hints.einstein_center + EINSTEIN_WINDOW * p[0].tanh();
        Shape {
            center,
            sigma_e: width(p[1]),
            gamma_e: width(p[2]),
            lower: center - self.offset_hints.0 * (OFFSET_MIN_FACTOR + span * sigmoid(p[3])),
            upper: center + self.offset_hints.1 * (OFFSET_MIN_FACTOR + span * sigmoid(p[4])),
            sigma_d: width(p[5]),
            gamma_d: width(p[6]),
        }
    }

    fn encode_start(&self) -> [f64; 7] {
        let span = OFFSET_MAX_FACTOR - OFFSET_MIN_FACTOR;
        let unit_offset = logit((1.0 - OFFSET_MIN_FACTOR) / span);
        let ls = self.hints.sigma.ln();
        let lg = self.hints.gamma.ln();
        [0.0, ls, lg, unit_offset, unit_offset, ls, lg]
    }

    fn basis(&self, s: &Shape) -> [Vec<f64>; 3] {
        let col = |c: f64, sg: f64, gm: f64| -> Vec<f64> {
            self.energies.iter().map(|&e| voigt_profile(e - c, sg, gm)).collect()
        };
        [
            col(s.center, s.sigma_e, s.gamma_e),
            col(s.lower, s.sigma_d, s.gamma_d),
            col(s.upper, s.sigma_d, s.gamma_d),
        ]
    }

    /// Areas and residual vector for shape `p`.
    fn evaluate(&self, p: &[f64]) -> ([f64; 3], Vec<f64>) {
        let shape = self.decode(p);
        let basis = self.basis(&shape);
        let areas = nnls3(&basis, self.y);
        let r = (0..self.y.len())
            .map(|k| areas[0] * basis[0][k] + areas[1] * basis[1][k] + areas[2] * basis[2][k] - self.y[k])
            .collect();
        (areas, r)
    }

    fn cost(&self, p: &[f64]) -> f64 {
        self.evaluate(p).1.iter().map(|r| r * r).sum()
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let n = self.y.len();
        let mut jac = DMatrix::zeros(n, p.len());
        let mut q = p.to_vec();
        for j in 0..p.len() {
            let h = 1e-6 * p[j].abs().max(1.0);
            q[j] = p[j] + h;
            let (_, rp) = self.evaluate(&q);
            q[j] = p[j] - h;
            let (_, rm) = self.evaluate(&q);
            q[j] = p[j];
            for k in 0..n {
                jac[(k, j)] = (rp[k] - rm[k]) / (2.0 * h);
            }
        }
        jac
    }

    fn result(&self, p: &[f64], iterations: usize, converged: bool) -> DecompositionResult {
        let s = self.decode(p);
        let (areas, r) = self.evaluate(p);
        let y_norm = self.y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let total = areas.iter().sum::<f64>();
        DecompositionResult {
            einstein_line: VoigtPeak {
                center: s.center,
                gaussian_sigma: s.sigma_e,
                lorentzian_gamma: s.gamma_e,
                amplitude: areas[0],
            },
            doublet: (
                VoigtPeak {
                    center: s.lower,
                    gaussian_sigma: s.sigma_d,
                    lorentzian_gamma: s.gamma_d,
                    amplitude: areas[1],
                },
                VoigtPeak {
                    center: s.upper,
                    gaussian_sigma: s.sigma_d,
                    lorentzian_gamma: s.gamma_d,
                    amplitude: areas[2],
                },
            ),
            entangled_fraction: if total > 0.0 { (areas[1] + areas[2]) / total } else { 0.0 },
            residual_norm: if y_norm > 0.0 { r_norm / y_norm } else { 0.0 },
            iterations,
            converged,
        }
    }

    /// Levenberg–Marquardt with Marquardt diagonal scaling.
    fn levenberg_marquardt(&self, start: [f64; 7]) -> (Vec<f64>, usize, bool) {
        let mut p = start.to_vec();
        let mut cost = self.cost(&p);
        let mut lambda = 1e-3;
        for iter in 1..=self.hints.max_iter {
            let (_, r) = self.evaluate(&p);
            let jac = self.jacobian(&p);
            let jtj = jac.transpose() * &jac;
            let grad = jac.transpose() * DVector::from_vec(r);
            let mut improved = false;
            while lambda < 1e16 {
                let mut a = jtj.clone();
                for d in 0..a.nrows() {
                    a[(d, d)] += lambda * jtj[(d, d)].max(1e-300);
                }
                let Some(step) = a.lu().solve(&(-&grad)) else {
                    lambda *= 10.0;
                    continue;
                };
                let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                let trial_cost = self.cost(&trial);
                if trial_cost.is_finite() && trial_cost < cost {
                    let rel = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
                    let step_norm = step.norm();
                    p = trial;
                    cost = trial_cost;
                    lambda = (lambda / 10.0).max(1e-12);
                    improved = true;
                    if rel < 1e-12 || step_norm < 1e-10 {
                        return (p, iter, true);
                    }
                    break;
                }
                lambda *= 10.0;
            }
            if !improved {
                // no descent direction left: stationary point
                return (p, iter, true);
            }
        }
        (p, self.hints.max_iter, false)
    }
}

/// min ‖Σ a_k b_k − y‖ with a ≥ 0, by enumerating active sets.
fn nnls3(basis: &[Vec<f64>; 3], y: &[f64]) -> [f64; 3] {
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let mut gram = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for i in 0..3 {
        rhs[i] = dot(&basis[i], y);
        for j in 0..3 {
            gram[(i, j)] = dot(&basis[i], &basis[j]);
        }
    }
    // ‖Ba − y‖² − ‖y‖² = aᵀGa − 2aᵀr
    let objective = |a: &[f64; 3]| {
        let av = Vector3::from_column_slice(a);
        (av.transpose() * gram * av)[0] - 2.0 * av.dot(&rhs)
    };
    let mut best = [0.0; 3];
    let mut best_obj = 0.0;
    for mask in 1u8..8 {
        let idx: Vec<usize> = (0..3).filter(|k| mask & (1 << k) != 0).collect();
        let m = idx.len();
        let g = DMatrix::from_fn(m, m, |r, c| gram[(idx[r], idx[c])]);
        let b = DVector::from_fn(m, |r, _| rhs[idx[r]]);
        let Some(sol) = g.cholesky().map(|ch| ch.solve(&b)) else {
            continue;
        };
        if sol.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            continue;
        }
        let mut a = [0.0; 3];
        for (r, &k) in idx.iter().enumerate() {
            a[k] = sol[r];
        }
        let obj = objective(&a);
        if obj < best_obj {
            best_obj = obj;
            best = a;
        }
    }
    best
}

/// Fit `spectrum` (sampled at `e_min + k·spacing`) with an Einstein line and
/// a doublet sharing one Voigt shape. The best of `hints.n_starts` seeded
/// starts is returned; the first start is the unperturbed hint.
pub fn decompose(
    spectrum: &[f64],
    e_min: f64,
    spacing: f64,
    hints: &DecomposeHints,
) -> Result<DecompositionResult> {
    if spectrum.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(spectrum.iter().position(|v| !v.is_finite()).unwrap_or(0)));
    }
    if spectrum.iter().any(|&v| v < 0.0) {
        return Err(Error::Domain("spectrum must be >= 0".to_string()));
    }
    if !(hints.sigma > 0.0 && hints.gamma > 0.0) {
        return Err(Error::invalid("hints", "initial widths must be > 0"));
    }
    let found = crate::peaks::find_peaks(spectrum, e_min, spacing, 0.0);
    if found.is_empty() {
        return Err(Error::PeaksUnresolved { found: 0 });
    }
    let problem = Problem {
        energies: (0..spectrum.len()).map(|k| e_min + k as f64 * spacing).collect(),
        y: spectrum,
        hints: *hints,
        offset_hints: hints.offset_hints(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(hints.seed);
    let base = problem.encode_start();
    let mut best: Option<DecompositionResult> = None;
    for start in 0..hints.n_starts.max(1) {
        let mut p0 = base;
        if start > 0 {
            for v in p0.iter_mut() {
                *v += rng.random_range(-0.5..0.5);
            }
        }
        let (p, iters, converged) = problem.levenberg_marquardt(p0);
        let candidate = problem.result(&p, iters, converged);
        best = Some(match best {
            None => candidate,
            Some(b) => {
                let tie = (candidate.residual_norm - b.residual_norm).abs() <= TIE_TOLERANCE;
                if tie {
                    if candidate.doublet_asymmetry() < b.doublet_asymmetry() {
                        candidate
                    } else {
                        b
                    }
                } else if candidate.residual_norm < b.residual_norm {
                    candidate
                } else {
                    b
                }
            }
        });
    }
    let best = best.expect("at least one start");
    if !best.converged {
        return Err(Error::FitNotConverged {
            diagnostic: format!(
                "best start used the full budget of {} iterations (residual {:.3e})",
                hints.max_iter, best.residual_norm
            ),
            best: Box::new(best),
        });
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(peaks: &[VoigtPeak], e_min: f64, spacing: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let e = e_min + k as f64 * spacing;
                peaks.iter().map(|p| super::super::voigt_eval(p, e)).sum()
            })
            .collect()
    }

    fn hints() -> DecomposeHints {
        DecomposeHints::new(16.227, 16.035, 16.418)
    }

    #[test]
    fn nnls_recovers_nonnegative_mix() {
        let basis = [vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0, 1.0], vec![0.0, 0.0, 1.0, 0.0]];
        let y = [2.0, 3.0, 0.0, 5.0];
        let a = nnls3(&basis, &y);
        assert!((a[0] - 2.0).abs() < 1e-12 && (a[1] - 3.0).abs() < 1e-12 && a[2].abs() < 1e-12);
        let y = [1.0, 1.0, -4.0, 2.0];
        assert_eq!(nnls3(&basis, &y)[2], 0.0);
    }

    #[test]
    fn doublet_only() {
        let (e0, dx, n) = (15.6, 0.004, 301);
        let lo = VoigtPeak::new(16.04, 0.03, 0.01, 1.0).unwrap();
        let hi = VoigtPeak::new(16.42, 0.03, 0.01, 1.0).unwrap();
        let y = synth(&[lo, hi], e0, dx, n);
        let r = decompose(&y, e0, dx, &hints()).unwrap();
        assert!(r.entangled_fraction >= 0.95, "{r:?}");
        assert!((r.doublet.0.center - 16.04).abs() < 0.01);
        assert!((r.doublet.1.center - 16.42).abs() < 0.01);
    }

    #[test]
    fn einstein_only() {
        let (e0, dx, n) = (15.6, 0.004, 301);
        let line = VoigtPeak::new(16.23, 0.03, 0.02, 1.0).unwrap();
        let y = synth(&[line], e0, dx, n);
        let r = decompose(&y, e0, dx, &hints()).unwrap();
        assert!(r.entangled_fraction <= 0.05, "{r:?}");
    }

    #[test]
    fn balanced_mixture() {
        let (e0, dx, n) = (15.6, 0.004, 301);
        let y = synth(
            &[
                VoigtPeak::new(16.227, 0.025, 0.01, 1.0).unwrap(),
                VoigtPeak::new(16.035, 0.025, 0.01, 0.5).unwrap(),
                VoigtPeak::new(16.418, 0.025, 0.01, 0.5).unwrap(),
            ],
            e0,
            dx,
            n,
        );
        let r = decompose(&y, e0, dx, &hints()).unwrap();
        assert!((r.entangled_fraction - 0.5).abs() < 0.05, "{r:?}");
    }

    #[test]
    fn empty_spectrum_has_no_peaks() {
        assert!(matches!(
            decompose(&[0.0; 50], 15.0, 0.01, &hints()),
            Err(Error::PeaksUnresolved { .. })
        ));
    }
}
