use std::f64::consts::PI;

use errorfunctions::ComplexErrorFunctions;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Area-normalized Voigt line scaled by `amplitude` (the line area).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoigtPeak {
    pub center: f64,
    pub gaussian_sigma: f64,
    pub lorentzian_gamma: f64,
    pub amplitude: f64,
}

impl VoigtPeak {
    pub fn new(center: f64, gaussian_sigma: f64, lorentzian_gamma: f64, amplitude: f64) -> Result<Self> {
        let p = VoigtPeak {
            center,
            gaussian_sigma,
            lorentzian_gamma,
            amplitude,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gaussian_sigma >= 0.0 && self.lorentzian_gamma >= 0.0) {
            return Err(Error::invalid("voigt", "widths must be >= 0"));
        }
        if self.gaussian_sigma == 0.0 && self.lorentzian_gamma == 0.0 {
            return Err(Error::invalid("voigt", "sigma and gamma cannot both be 0"));
        }
        if !(self.amplitude >= 0.0) {
            return Err(Error::invalid("voigt", "amplitude must be >= 0"));
        }
        Ok(())
    }

    /// Approximate FWHM (Olivero–Longbothum).
    pub fn fwhm(&self) -> f64 {
        let fg = super::FWHM_PER_SIGMA * self.gaussian_sigma;
        let fl = 2.0 * self.lorentzian_gamma;
        0.5346 * fl + (0.2166 * fl * fl + fg * fg).sqrt()
    }
}

/// Unit-area Voigt profile at offset `x` from the centre.
pub fn voigt_profile(x: f64, sigma: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        if sigma == 0.0 {
            return 0.0;
        }
        return (-0.5 * (x / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt());
    }
    if sigma == 0.0 {
        return gamma / (PI * (x * x + gamma * gamma));
    }
    let z = Complex64::new(x, gamma) / (sigma * 2f64.sqrt());
    z.w().re / (sigma * (2.0 * PI).sqrt())
}

pub fn voigt_eval(peak: &VoigtPeak, e: f64) -> f64 {
    peak.amplitude * voigt_profile(e - peak.center, peak.gaussian_sigma, peak.lorentzian_gamma)
}
