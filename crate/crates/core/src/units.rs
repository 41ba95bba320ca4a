//! Physical constants and unit conversions.
//!
//! Kernels work in Hartree atomic units. Public APIs take eV, fs, ns and
//! W/cm² and convert at the boundary.

/// Hartree energy in eV.
pub const HARTREE_EV: f64 = 27.211_386_245_988;
/// Atomic unit of time in fs.
pub const AU_TIME_FS: f64 = 0.024_188_843_265_857;
/// Reduced Planck constant in eV·fs.
pub const HBAR_EV_FS: f64 = HARTREE_EV * AU_TIME_FS;
/// Intensity of a cycle-averaged field of amplitude 1 a.u., in W/cm².
pub const AU_INTENSITY_W_CM2: f64 = 3.509_445e16;
/// Atomic unit of velocity in nm/fs.
pub const AU_VELOCITY_NM_FS: f64 = 2.187_691_263_64;
/// Elementary charge in C (J per eV).
pub const EV_J: f64 = 1.602_176_634e-19;
/// One megabarn in cm².
pub const MEGABARN_CM2: f64 = 1e-18;

/// Helium first ionization energy, eV.
pub const HE_BINDING_EV: f64 = 24.587_387;
/// He⁺ 1s → 2p transition energy, eV.
pub const HE_ION_TRANSITION_EV: f64 = 40.814;

pub fn ev_to_hartree(e: f64) -> f64 {
    e / HARTREE_EV
}

pub fn hartree_to_ev(e: f64) -> f64 {
    e * HARTREE_EV
}

pub fn fs_to_au(t: f64) -> f64 {
    t / AU_TIME_FS
}

pub fn au_to_fs(t: f64) -> f64 {
    t * AU_TIME_FS
}

pub fn ns_to_fs(t: f64) -> f64 {
    t * 1e6
}

/// Angular frequency in rad/fs to an energy in eV.
pub fn rad_fs_to_ev(w: f64) -> f64 {
    w * HBAR_EV_FS
}

/// Energy in eV to angular frequency in rad/fs.
pub fn ev_to_rad_fs(e: f64) -> f64 {
    e / HBAR_EV_FS
}

/// Peak field amplitude (a.u.) of a cycle-averaged intensity in W/cm².
pub fn field_amplitude_au(intensity_w_cm2: f64) -> f64 {
    (intensity_w_cm2 / AU_INTENSITY_W_CM2).sqrt()
}

/// Photon flux in photons / (cm² fs).
pub fn photon_flux_per_cm2_fs(intensity_w_cm2: f64, photon_energy_ev: f64) -> f64 {
    intensity_w_cm2 / (photon_energy_ev * EV_J) * 1e-15
}

/// Classical speed of a free electron with the given kinetic energy, nm/fs.
pub fn electron_speed_nm_fs(kinetic_energy_ev: f64) -> f64 {
    (2.0 * ev_to_hartree(kinetic_energy_ev)).sqrt() * AU_VELOCITY_NM_FS
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hbar_matches_codata() {
        assert_relative_eq!(HBAR_EV_FS, 0.658_211_956_9, max_relative = 1e-9);
    }

    #[test]
    fn photoelectron_speed_near_2_4_nm_per_fs() {
        let v = electron_speed_nm_fs(16.227);
        assert!((v - 2.4).abs() < 0.02, "{v}");
    }
}
