use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::config::{rabi_profile, BeamProfile, TrapConfig};
use super::modes::{transverse_mode_spectrum, ModeSpectrum};
use crate::error::{Error, Result};
use crate::units::hz_to_rad;

/// Default minimum allowed |Δ − ν_n|, Hz.
pub const DEFAULT_MIN_GAP_HZ: f64 = 1e3;

/// Where a coupling matrix came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Trap(Box<TrapConfig>),
    Synthetic(String),
    External(String),
}

/// Symmetric, zero-diagonal spin–spin coupling matrix in rad/s.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix {
    values: DMatrix<f64>,
    provenance: Provenance,
}

impl CouplingMatrix {
    pub fn new(values: DMatrix<f64>, provenance: Provenance) -> Result<Self> {
        let n = values.nrows();
        if n < 2 || values.ncols() != n {
            return Err(Error::param("couplings", format!("need a square matrix with N >= 2, got {}x{}", n, values.ncols())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("couplings", "non-finite entry"));
        }
        let scale = values.amax();
        for i in 0..n {
            if values[(i, i)].abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::param("couplings", format!("non-zero diagonal entry at {i}")));
            }
            for j in 0..i {
                if (values[(i, j)] - values[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::param("couplings", format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { values, provenance })
    }

    /// J_ij = scale / |i − j|^alpha on an open chain.
    pub fn power_law(n: usize, scale: f64, alpha: f64) -> Result<Self> {
        let values = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                scale / (i.abs_diff(j) as f64).powf(alpha)
            }
        });
        Self::new(values, Provenance::Synthetic(format!("power-law alpha={alpha} scale={scale}")))
    }

    /// Uniform nearest-neighbour chain with bond strength `j0`.
    pub fn nearest_neighbour(n: usize, j0: f64) -> Result<Self> {
        let values = DMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) == 1 { j0 } else { 0.0 });
        Self::new(values, Provenance::Synthetic(format!("nearest-neighbour J0={j0}")))
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn max_abs(&self) -> f64 {
        self.values.amax()
    }

    /// Mean nearest-neighbour coupling J̄ = Σ J_{i,i+1} / (N − 1).
    pub fn mean_nearest_neighbour(&self) -> f64 {
        let n = self.n();
        (0..n - 1).map(|i| self.values[(i, i + 1)]).sum::<f64>() / (n - 1) as f64
    }

    /// Matrix multiplied elementwise by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { values: &self.values * c, provenance: self.provenance.clone() }
    }
}

/// Couplings J_ij (rad/s) from the mode spectrum and per-ion Rabi
/// frequencies (Hz), rejecting detunings within 1 kHz of a mode.
pub fn coupling_matrix(trap: &TrapConfig, modes: &ModeSpectrum, rabi_hz: &[f64]) -> Result<CouplingMatrix> {
    coupling_matrix_with_gap(trap, modes, rabi_hz, DEFAULT_MIN_GAP_HZ)
}

pub fn coupling_matrix_with_gap(
    trap: &TrapConfig,
    modes: &ModeSpectrum,
    rabi_hz: &[f64],
    min_gap_hz: f64,
) -> Result<CouplingMatrix> {
    trap.validate()?;
    let n = modes.n_ions();
    if rabi_hz.len() != n || trap.n_ions != n {
        return Err(Error::param("rabi", format!("expected {n} Rabi frequencies for {} ions, got {}", trap.n_ions, rabi_hz.len())));
    }
    for (idx, m) in modes.modes.iter().enumerate() {
        if (trap.detuning - m.frequency).abs() < min_gap_hz {
            return Err(Error::Resonance { detuning_hz: trap.detuning, mode_hz: m.frequency, mode: idx, gap_hz: min_gap_hz });
        }
    }
    let delta = hz_to_rad(trap.detuning);
    let recoil = trap.recoil_frequency();
    let omega: Vec<f64> = rabi_hz.iter().map(|&r| hz_to_rad(r)).collect();
    let weights: Vec<f64> = modes
        .modes
        .iter()
        .map(|m| {
            let nu = hz_to_rad(m.frequency);
            1.0 / (delta * delta - nu * nu)
        })
        .collect();

    let mut values = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let sum: f64 = modes
                .modes
                .iter()
                .zip(&weights)
                .map(|(m, w)| m.vector[i] * m.vector[j] * w)
                .sum();
            let v = omega[i] * omega[j] * recoil * sum;
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    CouplingMatrix::new(values, Provenance::Trap(Box::new(trap.clone())))
}

/// Full pipeline from trap and beam parameters to couplings.
pub fn couplings_from_config(trap: &TrapConfig, beam: &BeamProfile) -> Result<(ModeSpectrum, CouplingMatrix)> {
    beam.validate()?;
    let modes = transverse_mode_spectrum(trap)?;
    let rabi = rabi_profile(beam, &modes.positions_m());
    let j = coupling_matrix(trap, &modes, &rabi)?;
    Ok((modes, j))
}

/// Frequency (Hz) at which two isolated spins i and j swap a shared
/// excitation under H_XY.
///
/// With J in rad/s the transferred population is sin²(J_ij t), so one full
/// population cycle takes π/|J_ij| and the returned value is |J_ij|/π. A
/// measured exchange frequency f therefore imports as J_ij = π f.
pub fn exchange_frequency(j: &CouplingMatrix, site_a: usize, site_b: usize) -> Result<f64> {
    if site_a == site_b {
        return Err(Error::param("sites", "exchange needs two distinct sites"));
    }
    if site_a >= j.n() || site_b >= j.n() {
        return Err(Error::param("sites", format!("site index out of range for N = {}", j.n())));
    }
    Ok(j.get(site_a, site_b).abs() / std::f64::consts::PI)
}
