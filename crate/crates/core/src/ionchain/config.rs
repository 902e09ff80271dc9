use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical trap and drive parameters. Frequencies in Hz, lengths in meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub n_ions: usize,
    pub axial_freq: f64,
    pub transverse_freq_x: f64,
    pub transverse_freq_y: f64,
    /// Bichromatic detuning Δ measured from the spin transition.
    pub detuning: f64,
    /// Effective transverse field B.
    #[serde(default)]
    pub transverse_field: f64,
    pub ion_mass: f64,
    pub laser_wavelength: f64,
}

impl TrapConfig {
    /// Seven ⁴⁰Ca⁺ ions at 0.219 / 2.655 / 2.628 MHz, 729 nm drive, with the
    /// detuning placed `offset_hz` above the highest transverse mode.
    pub fn innsbruck_seven(offset_hz: f64) -> Self {
        Self {
            n_ions: 7,
            axial_freq: 0.219e6,
            transverse_freq_x: 2.655e6,
            transverse_freq_y: 2.628e6,
            detuning: 2.655e6 + offset_hz,
            transverse_field: 0.0,
            ion_mass: crate::units::CA40_MASS,
            laser_wavelength: 729e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ions < 2 {
            return Err(Error::param("n_ions", format!("need at least 2 ions, got {}", self.n_ions)));
        }
        let positive = [
            ("axial_freq", self.axial_freq),
            ("transverse_freq_x", self.transverse_freq_x),
            ("transverse_freq_y", self.transverse_freq_y),
            ("detuning", self.detuning),
            ("ion_mass", self.ion_mass),
            ("laser_wavelength", self.laser_wavelength),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !self.transverse_field.is_finite() {
            return Err(Error::param("transverse_field", "must be finite"));
        }
        for (name, v) in [("transverse_freq_x", self.transverse_freq_x), ("transverse_freq_y", self.transverse_freq_y)] {
            if v <= self.axial_freq {
                return Err(Error::param(name, format!("{v} Hz must exceed the axial frequency {} Hz", self.axial_freq)));
            }
        }
        Ok(())
    }

    /// Laser wavevector k = 2π/λ in 1/m.
    pub fn wavevector(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.laser_wavelength
    }

    /// Recoil frequency ħk²/2m in rad/s.
    pub fn recoil_frequency(&self) -> f64 {
        crate::units::HBAR * self.wavevector().powi(2) / (2.0 * self.ion_mass)
    }
}

/// Elliptical Gaussian focus of the bichromatic beam.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamProfile {
    /// Rabi frequency of each bichromatic component at the beam center, Hz.
    pub peak_rabi: f64,
    pub waist_along_chain: f64,
    pub waist_transverse: f64,
    #[serde(default)]
    pub center_offset: f64,
}

impl BeamProfile {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("peak_rabi", self.peak_rabi),
            ("waist_along_chain", self.waist_along_chain),
            ("waist_transverse", self.waist_transverse),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !self.center_offset.is_finite() {
            return Err(Error::param("center_offset", "must be finite"));
        }
        Ok(())
    }

    /// Waist along the chain for which the *intensity* at `edge` (meters from
    /// the beam center) is lower than at the center by the fraction `drop`.
    pub fn waist_for_edge_intensity_drop(edge: f64, drop: f64) -> f64 {
        // I ∝ Ω² = exp(-2x²/w²)
        edge * (2.0 / -(1.0 - drop).ln()).sqrt()
    }
}

/// Per-ion Rabi frequency Ω_i (Hz) for ions at `positions` (meters).
///
/// The field amplitude falls off as a Gaussian along the chain axis; the
/// transverse waist does not vary across the chain and does not enter.
pub fn rabi_profile(beam: &BeamProfile, positions: &[f64]) -> Vec<f64> {
    positions
        .iter()
        .map(|&x| {
            let r = (x - beam.center_offset) / beam.waist_along_chain;
            beam.peak_rabi * (-r * r).exp()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beam() -> BeamProfile {
        BeamProfile { peak_rabi: 125e3, waist_along_chain: 380e-6, waist_transverse: 33e-6, center_offset: 0.0 }
    }

    #[test]
    fn rabi_at_center_and_waist() {
        let b = beam();
        let r = rabi_profile(&b, &[0.0, 0.0, 0.0]);
        assert!(r.iter().all(|&v| v == b.peak_rabi));
        let r = rabi_profile(&b, &[b.waist_along_chain]);
        assert!((r[0] - b.peak_rabi / std::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn offset_shifts_center() {
        let mut b = beam();
        b.center_offset = 10e-6;
        let r = rabi_profile(&b, &[10e-6]);
        assert_eq!(r[0], b.peak_rabi);
    }

    #[test]
    fn waist_for_drop_inverts() {
        let w = BeamProfile::waist_for_edge_intensity_drop(30e-6, 0.08);
        let b = BeamProfile { waist_along_chain: w, ..beam() };
        let r = rabi_profile(&b, &[0.0, 30e-6]);
        assert!(((r[1] / r[0]).powi(2) - 0.92).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_bad_traps() {
        let mut t = TrapConfig::innsbruck_seven(50e3);
        assert!(t.validate().is_ok());
        t.n_ions = 1;
        assert!(t.validate().is_err());
        let mut t = TrapConfig::innsbruck_seven(50e3);
        t.transverse_freq_y = 0.1e6;
        assert!(t.validate().is_err());
        let mut t = TrapConfig::innsbruck_seven(50e3);
        t.axial_freq = -1.0;
        assert!(t.validate().is_err());
        assert!(BeamProfile { waist_transverse: 0.0, ..beam() }.validate().is_err());
    }
}
