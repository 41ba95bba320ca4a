//! End-of-pulse photoelectron spectrum at resonance: the Einstein line
//! splits into a doublet separated by ħΩ.

use dressed_ion::model::{self, AtomicSystem, PulseSpec};
use dressed_ion::peaks;
use dressed_ion::spectra::{self, SpectralGrid};
use dressed_ion::units::HBAR_EV_FS;

fn main() -> dressed_ion::Result<()> {
    let atom = AtomicSystem::helium();
    let pulse = PulseSpec::flat_top(40.814, 1.25e13, 73.0)?;
    let grid = SpectralGrid::default();

    let start = std::time::Instant::now();
    let amps = spectra::end_of_pulse_amplitudes(&pulse, &atom, &grid)?;
    let elapsed = start.elapsed();
    let p = spectra::photoelectron_spectrum(&amps);

    let found = peaks::find_peaks(&p, grid.e_min, grid.spacing(), peaks::DEFAULT_REL_THRESHOLD);
    let (lo, hi) = peaks::dominant_pair(&found, amps.center).expect("doublet");
    let rabi = model::rabi_frequency(&pulse, &atom);
    let (e_minus, e_plus) = model::dressed_kinetic_energies(&pulse, &atom, rabi)?;

    println!("computed in {elapsed:.2?} on {} points", grid.n_points);
    println!("peaks      {:.4} eV  {:.4} eV  splitting {:.4} eV", lo.position, hi.position, hi.position - lo.position);
    println!("dressed    {e_minus:.4} eV  {e_plus:.4} eV  hbar*Omega {:.4} eV", HBAR_EV_FS * rabi);
    println!("P_ion      {:.4e}", amps.p_ion());

    // coarse text rendering of the doublet
    let vmax = p.iter().cloned().fold(0.0, f64::max);
    for k in (800..1200).step_by(16) {
        let bar = (40.0 * p[k] / vmax).round() as usize;
        println!("{:8.3} |{}", grid.energy(k), "#".repeat(bar));
    }
    Ok(())
}
