//! Spectrum and entropy for a Gaussian pulse of the same FWHM. The doublet
//! peaks are broader because the Rabi frequency follows the envelope.

use dressed_ion::entanglement;
use dressed_ion::model::{AtomicSystem, PulseSpec};
use dressed_ion::peaks;
use dressed_ion::spectra::{self, SpectralGrid};

fn main() -> dressed_ion::Result<()> {
    let atom = AtomicSystem::helium();
    let pulse = PulseSpec::gaussian(40.814, 1.25e13, 73.0)?;
    let grid = SpectralGrid::default();
    let amps = spectra::end_of_pulse_amplitudes(&pulse, &atom, &grid)?;
    let p = spectra::photoelectron_spectrum(&amps);
    for pk in peaks::find_peaks(&p, grid.e_min, grid.spacing(), 0.1) {
        println!("peak at {:.4} eV, height {:.3e}", pk.position, pk.height);
    }
    let rho = entanglement::reduced_ion_density_matrix(&amps)?;
    println!("P_ion = {:.4e}, S = {:.4}", amps.p_ion(), entanglement::entropy(&rho)?);
    Ok(())
}
