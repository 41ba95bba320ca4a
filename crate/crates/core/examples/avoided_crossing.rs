//! Photon-energy scan across the ionic resonance. The two ridges of the map
//! follow E± = ħω − E_bin + ħΔω/2 ± ħW/2 and never cross.

use dressed_ion::model::{self, AtomicSystem, PulseSpec};
use dressed_ion::spectra::{self, SpectralGrid};
use dressed_ion::units::HBAR_EV_FS;

fn main() -> dressed_ion::Result<()> {
    let atom = AtomicSystem::helium();
    let template = PulseSpec::flat_top(40.814, 1.25e13, 73.0)?;
    let grid = SpectralGrid::new(15.0, 17.5, 1001)?;
    let photon: Vec<f64> = (0..=20).map(|k| 40.514 + 0.03 * k as f64).collect();

    let map = spectra::photon_energy_scan(&template, &atom, &grid, &photon)?;
    let ridges = spectra::ridges(&map, 0.1)?;

    println!("{:>10} {:>9} {:>9} {:>9} {:>9}", "hw (eV)", "lower", "upper", "gap", "hbar*W");
    for r in &ridges {
        let pulse = template.with_photon_energy(r.photon_energy);
        let w = model::generalized_rabi(model::rabi_frequency(&pulse, &atom), pulse.detuning(&atom));
        let upper = r.upper.map(|u| format!("{u:9.4}")).unwrap_or_else(|| "      -".into());
        let gap = r.gap().map(|g| format!("{g:9.4}")).unwrap_or_else(|| "      -".into());
        println!("{:10.4} {:9.4} {upper} {gap} {:9.4}", r.photon_energy, r.lower, HBAR_EV_FS * w);
    }
    Ok(())
}
