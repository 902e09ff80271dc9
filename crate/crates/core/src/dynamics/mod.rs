//! Exact state-vector dynamics of the full N-spin chain.
//!
//! Basis states are σ^z products indexed by a bit string with bit `i` set iff
//! site `i` (0-based, site 1 in 1-based numbering) is up; site 1 is the least
//! significant bit.

mod hamiltonian;
mod observables;
mod propagate;
mod state;

pub use hamiltonian::{build_hamiltonian, build_hamiltonian_with_limit, Hamiltonian, Model, DEFAULT_MAX_SPINS};
pub use observables::{
    averaged_correlations, excitation_distribution, magnetisation, sector_leakage, two_point_correlations,
};
pub use propagate::{evolve, evolve_map, evolve_with, EvolveOptions, Method, Trajectory};
pub use state::{prepare_state, QuenchSpec, StateVector};
