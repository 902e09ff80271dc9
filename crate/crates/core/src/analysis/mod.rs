//! Fits on top of the simulators: power-law exponents, Gaussian arrival
//! times and light-cone front velocities.

mod alpha;
mod arrival;

pub use alpha::{fit_alpha_dispersion, fit_alpha_realspace, AlphaFit, FitFlag, FitMethod, ALPHA_RANGE, ALPHA_TOLERANCE};
pub use arrival::{arrival_sites, fit_front_velocity, fit_gaussian_arrival, front_from_magnetisation, ArrivalFit, FrontFit};
