//! Ion-crystal mechanics and the effective spin–spin coupling matrix.
//!
//! The pipeline is: dimensionless equilibrium positions of the Coulomb chain,
//! the two transverse normal-mode branches, a Gaussian beam profile giving a
//! per-ion Rabi frequency, and finally the Mølmer–Sørensen coupling sum
//!
//! ```text
//! J_ij = Ω_i Ω_j (ħk²/2m) Σ_n b_in b_jn / (Δ² − ν_n²)
//! ```
//!
//! evaluated entirely in angular units.

mod config;
mod coupling;
mod modes;
mod positions;

pub use config::{BeamProfile, TrapConfig};
pub use coupling::{
    coupling_matrix, coupling_matrix_with_gap, couplings_from_config, exchange_frequency,
    CouplingMatrix, Provenance, DEFAULT_MIN_GAP_HZ,
};
pub use modes::{transverse_mode_spectrum, Branch, ModeSpectrum, TransverseMode};
pub use positions::{equilibrium_positions, force_residual, length_scale};
pub use config::rabi_profile;
