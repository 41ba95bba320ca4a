use thiserror::Error;

use crate::instrument::DecompositionResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("below threshold: lower dressed kinetic energy {energy_ev:.6} eV is not positive")]
    BelowThreshold { energy_ev: f64 },

    #[error("grid clipping: dressed line at {energy_ev:.6} eV lies within 3 points of the grid edge [{e_min:.6}, {e_max:.6}] eV")]
    GridClipping { energy_ev: f64, e_min: f64, e_max: f64 },

    #[error("step-size underflow in propagator at t = {t:.6e} (step {step:.3e})")]
    StepUnderflow { t: f64, step: f64 },

    #[error("no ionization; entropy undefined")]
    NoIonization,

    #[error("density matrix not PSD: eigenvalue {0:.3e}")]
    NotPsd(f64),

    #[error("peaks unresolved: found {found} local maxima")]
    PeaksUnresolved { found: usize },

    #[error("kernel under-resolved: sigma {sigma:.3e} eV < spacing/4 ({spacing:.3e} eV)")]
    KernelUnderResolved { sigma: f64, spacing: f64 },

    #[error("non-finite input at index {0}")]
    NonFinite(usize),

    #[error("fit not converged: {diagnostic}")]
    FitNotConverged {
        best: Box<DecompositionResult>,
        diagnostic: String,
    },

    #[error("axis mismatch: {0}")]
    AxisMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error at row {row}, column {column}: {message}")]
    Csv {
        row: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code for the command-line runner: 2 for configuration
    /// problems, 3 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter { .. } => 2,
            _ => 3,
        }
    }
}
