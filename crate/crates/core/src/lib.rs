//! Exact spectra, classical dynamics, semiclassical level densities and
//! spectral statistics for the Dicke and Tavis-Cummings models.
//!
//! Energies are in the units of `omega`/`omega0`; scaled energies are
//! `epsilon = E / (omega0 j)`.

pub mod classical;
pub mod dos;
pub mod error;
pub mod exec;
pub mod model;
pub mod quantum;
pub mod stats;

pub use error::{ChaosError, Result};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use exec::Exec;
pub use model::{Model, ModelParams, Parity, Phase};
