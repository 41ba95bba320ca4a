//! Entanglement entropy between photoelectron and ion as a function of
//! interaction time, with the channel phases at the two doublet peaks.

use dressed_ion::entanglement;
use dressed_ion::model::{AtomicSystem, PulseSpec};
use dressed_ion::spectra::SpectralGrid;

fn main() -> dressed_ion::Result<()> {
    let atom = AtomicSystem::helium();
    let pulse = PulseSpec::flat_top(40.814, 1.25e13, 73.0)?;
    let grid = SpectralGrid::default();
    let times: Vec<f64> = (1..=24).map(|k| k as f64 * 73.0 / 24.0).collect();
    let report = entanglement::entropy_trace(&pulse, &atom, &grid, &times)?;

    println!("{:>8} {:>8} {:>9} {:>9} {:>7} {:>7}", "t (fs)", "S", "phi(E-)", "phi(E+)", "w-", "w+");
    let fmt = |p: Option<f64>| p.map(|v| format!("{v:9.4}")).unwrap_or_else(|| "        -".into());
    for k in 0..times.len() {
        println!(
            "{:8.2} {:8.5} {} {} {:7.4} {:7.4}",
            report.times[k],
            report.entropy[k],
            fmt(report.phase_minus[k]),
            fmt(report.phase_plus[k]),
            report.bell_minus[k],
            report.bell_plus[k]
        );
    }

    // the undressed atom leaves the ion in 1s: no entanglement
    let flat = entanglement::entropy_trace(&pulse, &atom.undressed(), &grid, &[36.5, 73.0])?;
    println!("undressed: S = {:?}", flat.entropy);
    Ok(())
}
