//! Shared fixtures for the benchmarks.

use magnon_core::ionchain::{couplings_from_config, CouplingMatrix};
use magnon_core::{BeamProfile, TrapConfig};

/// Seven-ion trap, drive 40 kHz above the top transverse mode.
pub fn seven_ion_setup() -> (TrapConfig, BeamProfile) {
    let trap = TrapConfig::innsbruck_seven(40e3);
    let beam = BeamProfile { peak_rabi: 125e3, waist_along_chain: 380e-6, waist_transverse: 22e-6, center_offset: 0.0 };
    (trap, beam)
}

pub fn seven_ion_couplings() -> CouplingMatrix {
    let (trap, beam) = seven_ion_setup();
    couplings_from_config(&trap, &beam).expect("reference trap is valid").1
}

/// J̄ = 2π·160 Hz power law on `n` sites.
pub fn power_law(n: usize, alpha: f64) -> CouplingMatrix {
    CouplingMatrix::power_law(n, 2.0 * std::f64::consts::PI * 160.0, alpha).expect("valid power law")
}
