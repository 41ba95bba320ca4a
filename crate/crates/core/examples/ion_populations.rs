//! Channel populations of the ion during a resonant flat-top pulse. The
//! total yield grows linearly while the 1s and 2p shares exchange at the
//! Rabi frequency.

use dressed_ion::model::{AtomicSystem, PulseSpec, RabiParams};
use dressed_ion::spectra;

fn main() -> dressed_ion::Result<()> {
    let atom = AtomicSystem::helium();
    let pulse = PulseSpec::flat_top(40.814, 1.25e13, 73.0)?;
    let t_r = RabiParams::from_pulse(&pulse, &atom).rabi_period;
    let times: Vec<f64> = (0..=292).map(|k| k as f64 * 0.25).collect();
    let trace = spectra::population_trace(&pulse, &atom, &times)?;

    for k in (0..times.len()).step_by(12) {
        println!(
            "t = {:6.2} fs  p_1s = {:.4e}  p_2p = {:.4e}  total = {:.4e}  ground = {:.9}",
            trace.times[k], trace.p_a[k], trace.p_b[k], trace.p_total[k], trace.p_ground[k]
        );
    }
    let r2 = spectra::yield_linearity(&trace, t_r, 6.0 * t_r).unwrap_or(f64::NAN);
    println!("T_R = {t_r:.2} fs, pulse = {:.2} T_R", pulse.fwhm_duration / t_r);
    println!("yield linearity over [T_R, 6 T_R]: R^2 = {r2:.6}");
    println!("sign changes of p_1s - p_2p: {}", spectra::crossing_count(&trace, t_r));
    Ok(())
}
