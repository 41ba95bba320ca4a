//! Rabi cycling of the He⁺ 1s–2p transition during a flat-top pulse,
//! compared with the constant-coupling closed form.

use dressed_ion::model::{self, AtomicSystem, PulseSpec, RabiParams};
use dressed_ion::propagator::{constant_coupling_propagator, two_level_propagator};

fn main() -> dressed_ion::Result<()> {
    let atom = AtomicSystem::helium();
    let pulse = PulseSpec::flat_top(40.814 + 0.05, 1.25e13, 73.0)?;
    let rabi = RabiParams::from_pulse(&pulse, &atom);
    println!(
        "Omega = {:.4} rad/fs, detuning = {:.4} rad/fs, W = {:.4} rad/fs, T_R = {:.2} fs",
        rabi.rabi_frequency, rabi.detuning, rabi.generalized_rabi, rabi.rabi_period
    );
    println!("{:>8} {:>10} {:>10} {:>12}", "t (fs)", "|a|^2", "|b|^2", "closed-form");
    for k in 0..=16 {
        let t = k as f64 * 73.0 / 16.0;
        let u = two_level_propagator(&pulse, rabi.rabi_frequency, rabi.detuning, 0.0, t)?;
        let exact = constant_coupling_propagator(rabi.rabi_frequency, rabi.detuning, t);
        let dev = (u.get(1, 0) - exact.get(1, 0)).norm();
        println!(
            "{t:8.2} {:10.6} {:10.6} {dev:12.2e}",
            u.get(0, 0).norm_sqr(),
            u.get(1, 0).norm_sqr()
        );
    }
    let w = model::generalized_rabi(rabi.rabi_frequency, rabi.detuning);
    println!("max |b|^2 = (Omega/W)^2 = {:.6}", (rabi.rabi_frequency / w).powi(2));
    Ok(())
}
