use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::config::TrapConfig;
use super::positions::{equilibrium_positions, length_scale};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    X,
    Y,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::X => "x",
            Branch::Y => "y",
        }
    }
}

/// One transverse normal mode of the chain.
#[derive(Clone, Debug)]
pub struct TransverseMode {
    pub branch: Branch,
    /// Mode frequency ν_n in Hz.
    pub frequency: f64,
    /// Normalized participation vector b_{·,n}.
    pub vector: DVector<f64>,
}

/// All 2N transverse modes plus the equilibrium geometry they were built on.
#[derive(Clone, Debug)]
pub struct ModeSpectrum {
    /// X branch first, then Y; each branch in descending frequency.
    pub modes: Vec<TransverseMode>,
    /// Dimensionless equilibrium positions.
    pub positions: Vec<f64>,
    /// Meters per dimensionless unit.
    pub length_scale: f64,
}

impl ModeSpectrum {
    pub fn n_ions(&self) -> usize {
        self.positions.len()
    }

    pub fn positions_m(&self) -> Vec<f64> {
        self.positions.iter().map(|u| u * self.length_scale).collect()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.frequency).collect()
    }

    pub fn branch(&self, branch: Branch) -> impl Iterator<Item = &TransverseMode> {
        self.modes.iter().filter(move |m| m.branch == branch)
    }

    /// Highest transverse mode frequency over both branches, Hz.
    pub fn top_frequency(&self) -> f64 {
        self.modes.iter().map(|m| m.frequency).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Δ − ν_top in Hz, the detuning as quoted relative to the highest mode.
    pub fn detuning_above_top_mode(&self, trap: &TrapConfig) -> f64 {
        trap.detuning - self.top_frequency()
    }
}

/// Transverse Hessian in units of ν_ax² for trap ratio β = ν_t/ν_ax.
fn transverse_matrix(u: &[f64], beta: f64) -> DMatrix<f64> {
    let n = u.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut diag = beta * beta;
        for j in 0..n {
            if j != i {
                let c = 1.0 / (u[i] - u[j]).abs().powi(3);
                a[(i, j)] = c;
                diag -= c;
            }
        }
        a[(i, i)] = diag;
    }
    a
}

fn branch_modes(u: &[f64], axial: f64, transverse: f64, branch: Branch) -> Result<Vec<TransverseMode>> {
    let eig = SymmetricEigen::new(transverse_matrix(u, transverse / axial));
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order
        .into_iter()
        .map(|k| {
            let lambda = eig.eigenvalues[k];
            if lambda <= 0.0 {
                return Err(Error::UnstableChain { branch: branch.name(), eigenvalue: lambda });
            }
            let mut v = eig.eigenvectors.column(k).into_owned();
            // Fix the overall sign: first significant component positive.
            if let Some(first) = v.iter().find(|c| c.abs() > 1e-12) {
                if *first < 0.0 {
                    v.neg_mut();
                }
            }
            Ok(TransverseMode { branch, frequency: axial * lambda.sqrt(), vector: v })
        })
        .collect()
}

/// Both transverse branches of the normal-mode spectrum.
pub fn transverse_mode_spectrum(trap: &TrapConfig) -> Result<ModeSpectrum> {
    trap.validate()?;
    let positions = equilibrium_positions(trap.n_ions)?;
    let mut modes = branch_modes(&positions, trap.axial_freq, trap.transverse_freq_x, Branch::X)?;
    modes.extend(branch_modes(&positions, trap.axial_freq, trap.transverse_freq_y, Branch::Y)?);
    Ok(ModeSpectrum {
        modes,
        length_scale: length_scale(trap.ion_mass, trap.axial_freq),
        positions,
    })
}
