//! Focal-volume averaging of the photon-energy scan. Weaker shells add
//! narrower doublets, which fill in the gap between the ridges.

use dressed_ion::model::{AtomicSystem, PulseSpec};
use dressed_ion::spectra::{self, SpectralGrid};

fn main() -> dressed_ion::Result<()> {
    let atom = AtomicSystem::helium();
    let i_peak = 1.25e13;
    let template = PulseSpec::flat_top(40.814, i_peak, 73.0)?;
    let grid = SpectralGrid::new(15.5, 17.0, 601)?;
    let photon = [40.754, 40.814, 40.874];

    let build = |i: f64| {
        spectra::photon_energy_scan(&template.with_intensity(i), &atom.rescaled_rate(i_peak, i), &grid, &photon)
    };
    let single = build(i_peak)?;
    let averaged = spectra::volume_average(build, i_peak, 12, 0.05)?;

    let shells = spectra::shell_intensities(i_peak, 12, 0.05);
    let weights = spectra::shell_weights(&shells);
    for (i, w) in shells.iter().zip(&weights) {
        println!("shell I = {i:.3e} W/cm2  weight {w:.4}");
    }
    let mid = grid.n_points / 2;
    for (name, map) in [("single", &single), ("averaged", &averaged)] {
        let row = map.row(1);
        let peak = row.iter().cloned().fold(0.0, f64::max);
        println!("{name:>9}: centre/peak at resonance = {:.3}", row[mid] / peak);
    }
    for r in spectra::ridges(&averaged, 0.1)? {
        println!("averaged ridges at {:.3} eV: {:.4} / {:?}", r.photon_energy, r.lower, r.upper);
    }
    Ok(())
}
