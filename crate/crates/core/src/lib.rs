//! Quasiparticle dynamics in long-range interacting trapped-ion spin chains.
//!
//! Frequencies enter through configuration in Hz; internally every rate is an
//! angular frequency in rad/s and ħ = 1. Library site indices are 0-based;
//! file formats and the command line use 1-based sites.

pub mod analysis;
pub mod bounds;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod io;
pub mod ionchain;
pub mod magnon;
pub mod units;

pub use error::{Error, Result};
pub use ionchain::{BeamProfile, CouplingMatrix, ModeSpectrum, TrapConfig};
