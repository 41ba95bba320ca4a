//! Field and atom parameters, Rabi frequencies, dressed-state energies and
//! the interaction-regime classifier.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{self, HBAR_EV_FS};

/// Intensity at which the default Rabi calibration reproduces T_R = 10.8 fs.
pub const CALIBRATION_INTENSITY_W_CM2: f64 = 1.25e13;
pub const CALIBRATION_RABI_PERIOD_FS: f64 = 10.8;

/// Ratio used for "much shorter than" in the entangling criterion.
pub const MUCH_SHORTER_FACTOR: f64 = 10.0;
/// Intensities at or above this are outside the entangling window.
pub const ENTANGLING_MAX_INTENSITY_W_CM2: f64 = 1e15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Envelope {
    FlatTop,
    Gaussian,
}

/// The XUV driving pulse.
///
/// `FlatTop` has unit field envelope on `[0, fwhm_duration]`. `Gaussian` has an
/// intensity FWHM of `fwhm_duration`, centred in `total_window`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    /// eV
    pub photon_energy: f64,
    /// W/cm²
    pub peak_intensity: f64,
    /// fs
    pub fwhm_duration: f64,
    pub envelope: Envelope,
    /// fs
    pub total_window: f64,
}

impl PulseSpec {
    pub fn new(
        photon_energy: f64,
        peak_intensity: f64,
        fwhm_duration: f64,
        envelope: Envelope,
        total_window: f64,
    ) -> Result<Self> {
        let p = PulseSpec {
            photon_energy,
            peak_intensity,
            fwhm_duration,
            envelope,
            total_window,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn flat_top(photon_energy: f64, peak_intensity: f64, duration: f64) -> Result<Self> {
        Self::new(photon_energy, peak_intensity, duration, Envelope::FlatTop, duration)
    }

    /// Gaussian pulse in a window of four FWHM.
    pub fn gaussian(photon_energy: f64, peak_intensity: f64, fwhm: f64) -> Result<Self> {
        Self::new(photon_energy, peak_intensity, fwhm, Envelope::Gaussian, 4.0 * fwhm)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.photon_energy > 0.0 && self.photon_energy.is_finite()) {
            return Err(Error::invalid("photon_energy", "must be > 0"));
        }
        if !(self.peak_intensity >= 0.0 && self.peak_intensity.is_finite()) {
            return Err(Error::invalid("peak_intensity", "must be >= 0"));
        }
        if !(self.fwhm_duration > 0.0 && self.fwhm_duration.is_finite()) {
            return Err(Error::invalid("fwhm_duration", "must be > 0"));
        }
        if !(self.total_window >= self.fwhm_duration && self.total_window.is_finite()) {
            return Err(Error::invalid("total_window", "must be >= fwhm_duration"));
        }
        Ok(())
    }

    pub fn with_photon_energy(mut self, photon_energy: f64) -> Self {
        self.photon_energy = photon_energy;
        self
    }

    pub fn with_intensity(mut self, intensity: f64) -> Self {
        self.peak_intensity = intensity;
        self
    }

    fn gaussian_center(&self) -> f64 {
        0.5 * self.total_window
    }

    fn gaussian_rate(&self) -> f64 {
        // field envelope exp(-2 ln2 (t - tc)^2 / fwhm^2): intensity FWHM = fwhm
        2.0 * LN_2 / (self.fwhm_duration * self.fwhm_duration)
    }

    /// Field envelope at time `t` (fs), peak value 1.
    pub fn field_envelope(&self, t: f64) -> f64 {
        match self.envelope {
            Envelope::FlatTop => {
                if (0.0..=self.fwhm_duration).contains(&t) {
                    1.0
                } else {
                    0.0
                }
            }
            Envelope::Gaussian => {
                let d = t - self.gaussian_center();
                (-self.gaussian_rate() * d * d).exp()
            }
        }
    }

    /// Envelope value on the open interval that contains `probe`; the
    /// flat-top discontinuity is resolved by the side `probe` lies on.
    pub fn field_envelope_near(&self, t: f64, probe: f64) -> f64 {
        match self.envelope {
            Envelope::FlatTop => self.field_envelope(probe),
            Envelope::Gaussian => self.field_envelope(t),
        }
    }

    /// dε/dt in 1/fs (zero for the flat top away from its edges).
    pub fn field_envelope_derivative(&self, t: f64) -> f64 {
        match self.envelope {
            Envelope::FlatTop => 0.0,
            Envelope::Gaussian => {
                let d = t - self.gaussian_center();
                -2.0 * self.gaussian_rate() * d * self.field_envelope(t)
            }
        }
    }

    /// ∫₀ᵗ ε(s)² ds in fs.
    pub fn intensity_integral(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self.envelope {
            Envelope::FlatTop => t.min(self.fwhm_duration),
            Envelope::Gaussian => {
                let a = (2.0 * self.gaussian_rate()).sqrt();
                let tc = self.gaussian_center();
                let erf = <f64 as errorfunctions::RealErrorFunctions>::erf;
                PI.sqrt() / (2.0 * a) * (erf(a * (t - tc)) + erf(a * tc))
            }
        }
    }

    /// Times where the envelope is not smooth, strictly inside `(0, t_end)`.
    pub fn breakpoints(&self, t_end: f64) -> Vec<f64> {
        match self.envelope {
            Envelope::FlatTop if self.fwhm_duration < t_end => vec![self.fwhm_duration],
            _ => Vec::new(),
        }
    }

    /// Time at which the amplitudes are stationary.
    pub fn end_of_pulse(&self) -> f64 {
        match self.envelope {
            Envelope::FlatTop => self.fwhm_duration,
            Envelope::Gaussian => self.total_window,
        }
    }

    /// Detuning Δω = ω − ω_ba in rad/fs.
    pub fn detuning(&self, atom: &AtomicSystem) -> f64 {
        units::ev_to_rad_fs(self.photon_energy - atom.ion_transition)
    }
}

/// How the neutral-atom ionization rate is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroundRate {
    /// Inverse rate τ_g (ns) at the run's configured peak intensity.
    Fixed { tau_g_ns: f64 },
    /// Rate σ I / ħω from `AtomicSystem::cross_section`.
    CrossSection,
}

/// He / He⁺ parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomicSystem {
    /// E_bin = ε_a − ε_g, eV
    pub binding_energy: f64,
    /// ħω_ba, eV
    pub ion_transition: f64,
    /// ⟨a|z|b⟩ in atomic units
    pub dipole_element: f64,
    /// Multiplies d·E₀ when forming Ω.
    pub rabi_calibration: f64,
    pub ground_rate: GroundRate,
    /// Neutral photoionization cross-section, Mb.
    pub cross_section: f64,
    /// Photoionization cross-section of the excited ion, Mb.
    pub ion_cross_section: f64,
    /// Spontaneous emission lifetime, ns.
    pub tau_se: f64,
}

impl Default for AtomicSystem {
    fn default() -> Self {
        Self::helium()
    }
}

impl AtomicSystem {
    /// Helium with the hydrogenic Z = 2 dipole, calibrated so that
    /// T_R = 10.8 fs at 1.25×10¹³ W/cm², τ_g = 20 ns and τ_SE = 0.1 ns.
    pub fn helium() -> Self {
        let dipole = hydrogenic_dipole(2.0).expect("Z = 2 is valid");
        AtomicSystem {
            binding_energy: units::HE_BINDING_EV,
            ion_transition: units::HE_ION_TRANSITION_EV,
            dipole_element: dipole,
            rabi_calibration: reference_rabi_calibration(dipole),
            ground_rate: GroundRate::Fixed { tau_g_ns: 20.0 },
            cross_section: 2.9,
            ion_cross_section: 0.1,
            tau_se: 0.1,
        }
    }

    /// Same atom with the ionic coupling switched off (Einstein line only).
    pub fn undressed(mut self) -> Self {
        self.dipole_element = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, "must be > 0"))
            }
        };
        positive("binding_energy", self.binding_energy)?;
        positive("ion_transition", self.ion_transition)?;
        positive("tau_se", self.tau_se)?;
        positive("cross_section", self.cross_section)?;
        positive("ion_cross_section", self.ion_cross_section)?;
        if !(self.dipole_element >= 0.0 && self.dipole_element.is_finite()) {
            return Err(Error::invalid("dipole_element", "must be >= 0"));
        }
        if !(self.rabi_calibration > 0.0 && self.rabi_calibration.is_finite()) {
            return Err(Error::invalid("rabi_calibration", "must be > 0"));
        }
        if let GroundRate::Fixed { tau_g_ns } = self.ground_rate {
            positive("tau_g_ns", tau_g_ns)?;
        }
        Ok(())
    }

    /// Neutral ionization rate (1/fs) during a pulse whose peak intensity is `pulse.peak_intensity`.
    pub fn ground_rate_per_fs(&self, pulse: &PulseSpec) -> f64 {
        match self.ground_rate {
            GroundRate::Fixed { tau_g_ns } => 1.0 / units::ns_to_fs(tau_g_ns),
            GroundRate::CrossSection => {
                self.cross_section
                    * units::MEGABARN_CM2
                    * units::photon_flux_per_cm2_fs(pulse.peak_intensity, pulse.photon_energy)
            }
        }
    }

    /// The same atom as seen by a pulse of intensity `to` when its fixed τ_g
    /// was specified at intensity `from`.
    pub fn rescaled_rate(mut self, from: f64, to: f64) -> Self {
        if let GroundRate::Fixed { tau_g_ns } = self.ground_rate {
            if to > 0.0 && from > 0.0 {
                self.ground_rate = GroundRate::Fixed {
                    tau_g_ns: tau_g_ns * from / to,
                };
            }
        }
        self
    }

    /// τ_g (fs) from the neutral cross-section at intensity `intensity`.
    pub fn tau_g_from_cross_section(&self, intensity: f64, photon_energy: f64) -> f64 {
        1.0 / (self.cross_section
            * units::MEGABARN_CM2
            * units::photon_flux_per_cm2_fs(intensity, photon_energy))
    }

    /// τ_ion (fs) from the ionic cross-section at intensity `intensity`.
    pub fn tau_ion(&self, intensity: f64, photon_energy: f64) -> f64 {
        1.0 / (self.ion_cross_section
            * units::MEGABARN_CM2
            * units::photon_flux_per_cm2_fs(intensity, photon_energy))
    }
}

/// Calibration factor that makes `rabi_frequency` give T_R = 10.8 fs at
/// 1.25×10¹³ W/cm² for a dipole `dipole` (a.u.).
pub fn reference_rabi_calibration(dipole: f64) -> f64 {
    let raw = dipole * units::field_amplitude_au(CALIBRATION_INTENSITY_W_CM2) / units::AU_TIME_FS;
    2.0 * PI / CALIBRATION_RABI_PERIOD_FS / raw
}

/// Ω, T_R, Δω and W for one pulse/atom pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RabiParams {
    pub rabi_frequency: f64,
    pub detuning: f64,
    pub generalized_rabi: f64,
    pub rabi_period: f64,
}

impl RabiParams {
    pub fn new(rabi_frequency: f64, detuning: f64) -> Self {
        RabiParams {
            rabi_frequency,
            detuning,
            generalized_rabi: generalized_rabi(rabi_frequency, detuning),
            rabi_period: 2.0 * PI / rabi_frequency,
        }
    }

    pub fn from_pulse(pulse: &PulseSpec, atom: &AtomicSystem) -> Self {
        Self::new(rabi_frequency(pulse, atom), pulse.detuning(atom))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IonChannel {
    /// 1s⁺
    A,
    /// 2p⁺
    B,
}

/// Uncoupled ion–field basis label |i, N + offset⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct DressedStateLabel {
    pub channel: IonChannel,
    pub photon_offset: i32,
}

impl DressedStateLabel {
    pub fn for_channel(channel: IonChannel) -> Self {
        let photon_offset = match channel {
            IonChannel::A => -1,
            IonChannel::B => -2,
        };
        DressedStateLabel {
            channel,
            photon_offset,
        }
    }
}

/// Peak Rabi frequency Ω (rad/fs) of the ionic transition under `pulse`.
pub fn rabi_frequency(pulse: &PulseSpec, atom: &AtomicSystem) -> f64 {
    let field = units::field_amplitude_au(pulse.peak_intensity);
    atom.rabi_calibration * atom.dipole_element * field / units::AU_TIME_FS
}

/// ⟨1s|z|2p₀⟩ of a hydrogenic ion of charge `z`, atomic units.
pub fn hydrogenic_dipole(z: f64) -> Result<f64> {
    if !(z >= 1.0) {
        return Err(Error::Domain(format!("nuclear charge must be >= 1, got {z}")));
    }
    Ok(128.0 * 2f64.sqrt() / 243.0 / z)
}

/// W = √(Ω² + Δω²).
pub fn generalized_rabi(rabi: f64, detuning: f64) -> f64 {
    rabi.hypot(detuning)
}

/// Einstein line ħω − E_bin in eV.
pub fn einstein_energy(pulse: &PulseSpec, atom: &AtomicSystem) -> f64 {
    pulse.photon_energy - atom.binding_energy
}

/// Dressed kinetic energies (E₋, E₊) in eV for a peak Rabi frequency `rabi` (rad/fs).
pub fn dressed_kinetic_energies(
    pulse: &PulseSpec,
    atom: &AtomicSystem,
    rabi: f64,
) -> Result<(f64, f64)> {
    let detuning = pulse.detuning(atom);
    let w = generalized_rabi(rabi, detuning);
    let mid = einstein_energy(pulse, atom) + 0.5 * HBAR_EV_FS * detuning;
    let lower = mid - 0.5 * HBAR_EV_FS * w;
    let upper = mid + 0.5 * HBAR_EV_FS * w;
    if lower <= 0.0 {
        return Err(Error::BelowThreshold { energy_ev: lower });
    }
    Ok((lower, upper))
}

/// Ground-state amplitude g(t) = exp(−t / 2τ_g), `t` in fs and `tau_g` in ns.
pub fn ground_survival(t: f64, tau_g_ns: f64) -> f64 {
    (-t / (2.0 * units::ns_to_fs(tau_g_ns))).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    /// Interaction shorter than the Rabi period.
    RegionI,
    /// Ion dressed, photoelectron entangled.
    RegionII,
    /// Neutral population saturated.
    RegionIII,
    /// Dressed ion lost to further ionization.
    RegionIV,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeReport {
    pub intensity: f64,
    pub duration: f64,
    pub region: Region,
    pub entangling: bool,
    /// Dressed but shorter than two Rabi periods.
    pub boundary: bool,
    pub rabi_period: f64,
    pub tau_g: f64,
    pub tau_ion: f64,
}

/// Classify an (intensity, duration) point for a resonant pulse.
pub fn regime_classify(intensity: f64, duration: f64, atom: &AtomicSystem) -> Result<RegimeReport> {
    if !(intensity > 0.0) || !(duration > 0.0) {
        return Err(Error::Domain(
            "intensity and duration must be positive".to_string(),
        ));
    }
    let photon_energy = atom.ion_transition;
    let pulse = PulseSpec::flat_top(photon_energy, intensity, duration)?;
    let rabi_period = 2.0 * PI / rabi_frequency(&pulse, atom);
    let tau_g = atom.tau_g_from_cross_section(intensity, photon_energy);
    let tau_ion = atom.tau_ion(intensity, photon_energy);
    if units::ns_to_fs(atom.tau_se) < MUCH_SHORTER_FACTOR * tau_ion {
        log::warn!(
            "spontaneous emission ({} ns) is not much longer than tau_ion ({tau_ion:.3e} fs)",
            atom.tau_se
        );
    }

    let region = if duration < rabi_period {
        Region::RegionI
    } else if duration < tau_g {
        Region::RegionII
    } else if duration < tau_ion {
        Region::RegionIII
    } else {
        Region::RegionIV
    };
    let entangling = region == Region::RegionII
        && 2.0 * rabi_period < duration
        && MUCH_SHORTER_FACTOR * rabi_period <= tau_g
        && intensity < ENTANGLING_MAX_INTENSITY_W_CM2;
    let boundary = !entangling && region == Region::RegionII;

    Ok(RegimeReport {
        intensity,
        duration,
        region,
        entangling,
        boundary,
        rabi_period,
        tau_g,
        tau_ion,
    })
}
