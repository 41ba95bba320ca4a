//! Photoionization of helium followed by Rabi dressing of the He⁺ ion:
//! photoelectron spectra, avoided crossings, entanglement entropy and the
//! spectral decomposition used to separate entangled from non-entangled
//! contributions.

pub mod entanglement;
pub mod error;
pub mod instrument;
pub mod io;
pub mod model;
pub mod peaks;
pub mod propagator;
pub mod run;
pub mod spectra;
pub mod units;

pub use error::{Error, Result};
pub use model::{AtomicSystem, Envelope, GroundRate, PulseSpec, RabiParams};
pub use spectra::{ChannelAmplitudes, PopulationTrace, SpectralGrid, SpectrumMap};
