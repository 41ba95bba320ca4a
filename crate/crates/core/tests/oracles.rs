mod common;

use std::f64::consts::PI;

use common::{flat_top_amplitudes, max_relative_error, resonant_pulse};
use dressed_ion::entanglement;
use dressed_ion::model::{self, AtomicSystem, PulseSpec};
use dressed_ion::spectra::{self, QuadratureOptions, SpectralGrid};
use dressed_ion::units::HBAR_EV_FS;

#[test]
fn resonant_amplitudes_match_closed_form() {
    let atom = AtomicSystem::helium();
    let pulse = resonant_pulse();
    let grid = SpectralGrid::default();
    for t in [5.0, 36.5, 73.0] {
        let amps = spectra::channel_amplitudes(&pulse, &atom, &grid, t).unwrap();
        let (ca, cb) = flat_top_amplitudes(&pulse, &atom, &grid, t);
        assert!(max_relative_error(&amps.c_a, &ca) < 1e-6, "t {t}");
        assert!(max_relative_error(&amps.c_b, &cb) < 1e-6, "t {t}");
    }
}

#[test]
fn detuned_amplitudes_match_closed_form() {
    let atom = AtomicSystem::helium();
    for (hw, i) in [(40.9, 1.25e13), (40.6, 3.35e12), (41.2, 8e13)] {
        let pulse = PulseSpec::flat_top(hw, i, 40.0).unwrap();
        let grid = SpectralGrid::new(14.0, 18.5, 1501).unwrap();
        let amps = spectra::channel_amplitudes(&pulse, &atom, &grid, 40.0).unwrap();
        let (ca, cb) = flat_top_amplitudes(&pulse, &atom, &grid, 40.0);
        assert!(max_relative_error(&amps.c_a, &ca) < 1e-6, "hw {hw}");
        assert!(max_relative_error(&amps.c_b, &cb) < 1e-6, "hw {hw}");
    }
}

#[test]
fn fast_depletion_matches_closed_form() {
    // τ_g comparable to the pulse stresses the g(t) factor
    let mut atom = AtomicSystem::helium();
    atom.ground_rate = model::GroundRate::Fixed { tau_g_ns: 2e-5 };
    let pulse = resonant_pulse();
    let grid = SpectralGrid::default();
    let amps = spectra::channel_amplitudes(&pulse, &atom, &grid, 73.0).unwrap();
    let (ca, cb) = flat_top_amplitudes(&pulse, &atom, &grid, 73.0);
    assert!(max_relative_error(&amps.c_a, &ca) < 1e-6);
    assert!(max_relative_error(&amps.c_b, &cb) < 1e-6);
}

#[test]
fn coarse_quadrature_is_less_accurate_but_converges() {
    let atom = AtomicSystem::helium();
    let pulse = resonant_pulse();
    let grid = SpectralGrid::default();
    let (ca, _) = flat_top_amplitudes(&pulse, &atom, &grid, 73.0);
    let err = |ppp: usize| {
        let opts = QuadratureOptions::default().with_points_per_period(ppp);
        let a = spectra::channel_amplitudes_with(&pulse, &atom, &grid, 73.0, &opts).unwrap();
        max_relative_error(&a.c_a, &ca)
    };
    let (e8, e16) = (err(8), err(16));
    assert!(e16 < e8 / 8.0, "{e8} {e16}");
}

#[test]
fn undressed_ion_gives_einstein_line() {
    let atom = AtomicSystem::helium().undressed();
    let pulse = resonant_pulse();
    let grid = SpectralGrid::default();
    let amps = spectra::end_of_pulse_amplitudes(&pulse, &atom, &grid).unwrap();
    assert!(amps.c_b.iter().all(|c| c.norm() == 0.0));
    let p = spectra::photoelectron_spectrum(&amps);
    let k = p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!((grid.energy(k) - model::einstein_energy(&pulse, &atom)).abs() <= grid.spacing());
}

#[test]
fn parseval_populations_match_grid_sum() {
    let atom = AtomicSystem::helium();
    let pulse = resonant_pulse();
    // a wide grid captures the sinc tails
    let grid = SpectralGrid::new(8.0, 24.5, 8001).unwrap();
    let amps = spectra::channel_amplitudes(&pulse, &atom, &grid, 73.0).unwrap();
    let trace = spectra::population_trace(&pulse, &atom, &[73.0]).unwrap();
    assert!((amps.population_a() - trace.p_a[0]).abs() / trace.p_a[0] < 2e-3);
    assert!((amps.population_b() - trace.p_b[0]).abs() / trace.p_b[0] < 2e-3);
    // probability is conserved between the atom and the ion
    assert!((trace.p_total[0] + trace.p_ground[0] - 1.0).abs() < 1e-12);
}

#[test]
fn resonant_population_difference_follows_sine() {
    // p_a − p_b = Γ sin(Ωt)/Ω for a resonant flat top with negligible depletion
    let atom = AtomicSystem::helium();
    let pulse = resonant_pulse();
    let omega = model::rabi_frequency(&pulse, &atom);
    let gamma = atom.ground_rate_per_fs(&pulse);
    let times: Vec<f64> = (0..=73).map(|k| k as f64).collect();
    let tr = spectra::population_trace(&pulse, &atom, &times).unwrap();
    for (k, &t) in times.iter().enumerate() {
        let expect = gamma * (omega * t).sin() / omega;
        assert!((tr.p_a[k] - tr.p_b[k] - expect).abs() < 1e-6 * gamma * 73.0, "t {t}");
    }
}

#[test]
fn resonant_crossings_follow_half_period_zeros() {
    // zeros of sin(Ωt) every T_R/2: a 6.7 T_R pulse has 13 sign changes
    let atom = AtomicSystem::helium();
    let t_r = model::RabiParams::from_pulse(&resonant_pulse(), &atom).rabi_period;
    let pulse = PulseSpec::flat_top(40.814, 1.25e13, 6.7 * t_r).unwrap();
    let times: Vec<f64> = (0..=1000).map(|k| k as f64 * 6.7 * t_r / 1000.0).collect();
    let tr = spectra::population_trace(&pulse, &atom, &times).unwrap();
    assert_eq!(spectra::crossing_count(&tr, t_r), 13);
}

#[test]
fn entropy_matches_flat_top_eigenvalues() {
    // λ± = (1 ± |sin(Ωt/2)|/(Ωt/2))/2 in the negligible-depletion limit
    let atom = AtomicSystem::helium();
    let pulse = resonant_pulse();
    let omega = model::rabi_frequency(&pulse, &atom);
    let grid = SpectralGrid::new(8.0, 24.5, 8001).unwrap();
    // the grid truncates sinc tails, so short times are avoided
    for t in [20.0, 40.0, 73.0] {
        let amps = spectra::channel_amplitudes(&pulse, &atom, &grid, t).unwrap();
        let rho = entanglement::reduced_ion_density_matrix(&amps).unwrap();
        let x = 0.5 * omega * t;
        let r = (x.sin() / x).abs();
        let eig = [(1.0 - r) / 2.0, (1.0 + r) / 2.0];
        let s_exact = -eig.iter().map(|l| l * l.log2()).sum::<f64>();
        let s = entanglement::entropy(&rho).unwrap();
        assert!((s - s_exact).abs() < 5e-3, "t {t}: {s} vs {s_exact}");
    }
}

#[test]
fn dressed_peaks_sit_at_half_rabi_splitting() {
    let atom = AtomicSystem::helium();
    let pulse = resonant_pulse();
    let amps = spectra::end_of_pulse_amplitudes(&pulse, &atom, &SpectralGrid::default()).unwrap();
    let omega = model::rabi_frequency(&pulse, &atom);
    let (lo, hi) = entanglement::doublet_peaks(&amps, omega).unwrap();
    let (e_lo, e_hi) = model::dressed_kinetic_energies(&pulse, &atom, omega).unwrap();
    assert!((lo - e_lo).abs() < 0.005 && (hi - e_hi).abs() < 0.005);
    assert!(((hi - lo) - HBAR_EV_FS * 2.0 * PI / 10.8).abs() < 0.003);
}
