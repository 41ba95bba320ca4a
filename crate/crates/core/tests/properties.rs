use num_complex::Complex64 as C;
use proptest::prelude::*;

use dressed_ion::entanglement::{self, ReducedIonDensity};
use dressed_ion::instrument::{decompose, voigt_profile, DecomposeHints};
use dressed_ion::instrument::{self, DeconvolutionOptions, InstrumentResponse};
use dressed_ion::io::csv;
use dressed_ion::model::{AtomicSystem, PulseSpec};
use dressed_ion::propagator::{constant_coupling_propagator, two_level_propagator};
use dressed_ion::spectra::{self, ChannelAmplitudes, SpectralGrid, SpectrumMap};

fn amplitudes(n: usize) -> impl Strategy<Value = ChannelAmplitudes> {
    let c = (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(r, i)| C::new(r, i));
    (
        prop::collection::vec(c.clone(), n),
        prop::collection::vec(c, n),
    )
        .prop_filter("non-zero", |(a, b)| a.iter().chain(b).any(|z| z.norm() > 1e-3))
        .prop_map(move |(a, b)| {
            let grid = SpectralGrid::new(0.0, 1.0, n).unwrap();
            ChannelAmplitudes::new(grid, a, b, 1.0, 0.5).unwrap()
        })
}

fn spectrum() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 40..120)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn propagator_is_unitary(rabi in 0.0f64..2.0, det in -2.0f64..2.0, tau in 0.0f64..60.0, gaussian in any::<bool>()) {
        let pulse = if gaussian {
            PulseSpec::gaussian(40.8, 1e13, 20.0).unwrap()
        } else {
            PulseSpec::flat_top(40.8, 1e13, 60.0).unwrap()
        };
        let u = two_level_propagator(&pulse, rabi, det, 0.0, tau).unwrap();
        prop_assert!(u.unitarity_defect() < 1e-9);
        // the closed form is exactly unitary too
        prop_assert!(constant_coupling_propagator(rabi, det, tau).unitarity_defect() < 1e-12);
    }

    #[test]
    fn reduced_density_is_a_state(amps in amplitudes(17)) {
        let rho = entanglement::reduced_ion_density_matrix(&amps).unwrap();
        prop_assert!((rho.trace() - 1.0).abs() < 1e-12);
        prop_assert!(rho.hermiticity_defect() < 1e-12);
        let [l0, l1] = rho.eigenvalues();
        prop_assert!(l0 > -1e-12 && l1 < 1.0 + 1e-12);
        let s = entanglement::entropy(&rho).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&s));
    }

    #[test]
    fn entropy_ignores_global_scale_and_phase(amps in amplitudes(11), mag in 0.01f64..100.0, ph in -3.2f64..3.2) {
        let s0 = entanglement::entropy(&entanglement::reduced_ion_density_matrix(&amps).unwrap()).unwrap();
        let scaled = amps.scaled(C::from_polar(mag, ph));
        let s1 = entanglement::entropy(&entanglement::reduced_ion_density_matrix(&scaled).unwrap()).unwrap();
        prop_assert!((s0 - s1).abs() < 1e-9);
    }

    #[test]
    fn entropy_invariant_under_ion_unitaries(amps in amplitudes(11), rabi in 0.0f64..3.0, det in -3.0f64..3.0, tau in 0.0f64..10.0) {
        let u = constant_coupling_propagator(rabi, det, tau);
        let (a, b): (Vec<C>, Vec<C>) = amps
            .c_a
            .iter()
            .zip(&amps.c_b)
            .map(|(&x, &y)| (u.get(0, 0) * x + u.get(0, 1) * y, u.get(1, 0) * x + u.get(1, 1) * y))
            .unzip();
        let rotated = ChannelAmplitudes::new(amps.grid, a, b, amps.time, amps.center).unwrap();
        let s0 = entanglement::entropy(&entanglement::reduced_ion_density_matrix(&amps).unwrap()).unwrap();
        let s1 = entanglement::entropy(&entanglement::reduced_ion_density_matrix(&rotated).unwrap()).unwrap();
        prop_assert!((s0 - s1).abs() < 1e-8);
    }

    #[test]
    fn diagonal_entropy_is_binary_entropy(p in 0.0f64..=1.0) {
        let s = entanglement::entropy(&ReducedIonDensity::diagonal(p, 1.0 - p)).unwrap();
        let h = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
        prop_assert!((s - h(p) - h(1.0 - p)).abs() < 1e-12);
    }

    #[test]
    fn product_states_have_zero_entropy(amps in amplitudes(13), ph in -3.2f64..3.2, w in 0.0f64..1.0) {
        // c_a ∝ f, c_b ∝ f with a fixed ratio: a pure ion state
        let f = amps.c_a.clone();
        let b: Vec<C> = f.iter().map(|z| z * C::from_polar(w, ph)).collect();
        if f.iter().all(|z| z.norm() < 1e-6) { return Ok(()); }
        let prod = ChannelAmplitudes::new(amps.grid, f, b, 1.0, 0.5).unwrap();
        let s = entanglement::entropy(&entanglement::reduced_ion_density_matrix(&prod).unwrap()).unwrap();
        prop_assert!(s < 1e-6, "{}", s);
    }

    #[test]
    fn phase_wrap_is_in_range(x in -100.0f64..100.0) {
        let w = entanglement::wrap_phase(x);
        prop_assert!(w > -std::f64::consts::PI - 1e-12 && w <= std::f64::consts::PI + 1e-12);
        let k = (x - w) / (2.0 * std::f64::consts::PI);
        prop_assert!((k - k.round()).abs() < 1e-9);
    }

    #[test]
    fn convolution_keeps_area_and_sign(p in spectrum(), sigma in 0.005f64..0.05) {
        let spacing = 0.01;
        let mut padded = vec![0.0; 40];
        padded.extend(&p);
        padded.extend(vec![0.0; 40]);
        let q = instrument::convolve_sigma(&padded, spacing, sigma).unwrap();
        prop_assert!(q.iter().all(|&v| v >= 0.0));
        let (a, b): (f64, f64) = (padded.iter().sum(), q.iter().sum());
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn richardson_lucy_stays_non_negative(p in spectrum(), sigma in 0.005f64..0.05) {
        let q = instrument::convolve_sigma(&p, 0.01, sigma).unwrap();
        let d = instrument::deconvolve_sigma(&q, 0.01, sigma, &DeconvolutionOptions { max_iter: 40, stop_tol: 0.0 }).unwrap();
        prop_assert!(d.iter().all(|&v| v >= 0.0 && v.is_finite()));
        let (a, b): (f64, f64) = (q.iter().sum(), d.iter().sum());
        prop_assert!((a - b).abs() <= 1e-8 * a.max(1.0));
    }

    #[test]
    fn voigt_has_unit_area(sigma in 0.01f64..0.2, gamma in 0.0f64..0.05) {
        let h = 1e-3;
        let half = 8.0 * sigma + 400.0 * gamma;
        let n = (2.0 * half / h) as usize;
        let area: f64 = (0..=n).map(|k| voigt_profile(-half + k as f64 * h, sigma, gamma)).sum::<f64>() * h;
        // Lorentzian tails beyond the window carry 2γ/(π·half)
        let tail = 2.0 * gamma / (std::f64::consts::PI * half);
        prop_assert!((area + tail - 1.0).abs() < 2e-3, "{}", area);
    }

    #[test]
    fn map_csv_round_trip(rows in 1usize..5, cols in 2usize..8, seed in any::<u64>()) {
        let mut x = seed | 1;
        let mut next = || { x ^= x << 13; x ^= x >> 7; x ^= x << 17; (x >> 11) as f64 / (1u64 << 53) as f64 };
        let hw: Vec<f64> = (0..rows).map(|r| 40.0 + 0.01 * r as f64).collect();
        let ke: Vec<f64> = (0..cols).map(|c| 16.0 + 0.1 * c as f64).collect();
        let data: Vec<f64> = (0..rows * cols).map(|_| next() * 1e-3).collect();
        let m = SpectrumMap::new(hw, ke, data).unwrap();
        let text = csv::map_to_string(&m).unwrap();
        let back = csv::map_from_str(&text).unwrap();
        prop_assert_eq!(csv::map_to_string(&back).unwrap(), text);
        prop_assert!(back.same_axes(&m));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn probability_is_conserved(hw in 40.5f64..41.1, log_i in 11.0f64..14.0, t in 1.0f64..80.0) {
        let atom = AtomicSystem::helium();
        let pulse = PulseSpec::flat_top(hw, 10f64.powf(log_i), 80.0).unwrap();
        let tr = spectra::population_trace(&pulse, &atom, &[t]).unwrap();
        prop_assert!((tr.p_total[0] + tr.p_ground[0] - 1.0).abs() < 1e-10);
        prop_assert!(tr.p_a[0] >= 0.0 && tr.p_b[0] >= 0.0);
    }

    #[test]
    fn decomposition_is_scale_equivariant(frac in 0.1f64..0.9, scale in 0.1f64..1e3) {
        let atom = AtomicSystem::helium();
        let pulse = PulseSpec::flat_top(40.814, 1.25e13, 73.0).unwrap();
        let hints = DecomposeHints::from_model(&pulse, &atom).unwrap().with_seed(3);
        let grid = SpectralGrid::new(15.2, 17.3, 421).unwrap();
        let x = grid.energies();
        let v = |c: f64, e: f64| voigt_profile(e - c, 0.02, 0.01);
        let p: Vec<f64> = x
            .iter()
            .map(|&e| (1.0 - frac) * v(hints.einstein_center, e)
                + 0.5 * frac * (v(hints.doublet_lower, e) + v(hints.doublet_upper, e)))
            .collect();
        let q: Vec<f64> = p.iter().map(|v| v * scale).collect();
        let r1 = decompose(&p, grid.e_min, grid.spacing(), &hints).unwrap();
        let r2 = decompose(&q, grid.e_min, grid.spacing(), &hints).unwrap();
        prop_assert!((r1.entangled_fraction - frac).abs() < 1e-3);
        prop_assert!((r1.entangled_fraction - r2.entangled_fraction).abs() < 1e-6);
        prop_assert!((r2.einstein_line.amplitude / r1.einstein_line.amplitude / scale - 1.0).abs() < 1e-5);
    }

    #[test]
    fn convolved_map_keeps_row_areas(frac in 0.0f64..=1.0) {
        let resp = InstrumentResponse::default();
        let ke: Vec<f64> = (0..200).map(|k| 15.0 + 0.01 * k as f64).collect();
        let a: Vec<f64> = ke.iter().map(|e| (-(e - 16.0f64).powi(2) / 0.01).exp()).collect();
        let b: Vec<f64> = ke.iter().map(|e| (-(e - 16.2f64).powi(2) / 0.01).exp()).collect();
        let ma = SpectrumMap::new(vec![40.8], ke.clone(), a).unwrap();
        let mb = SpectrumMap::new(vec![40.8], ke, b).unwrap();
        let mix = instrument::mixture_map(&ma, &mb, frac).unwrap();
        let conv = instrument::convolve_map(&mix, &resp).unwrap();
        let (s0, s1): (f64, f64) = (mix.row(0).iter().sum(), conv.row(0).iter().sum());
        prop_assert!((s0 - s1).abs() < 1e-9 * s0);
    }
}
