//! Single-excitation (magnon) sector of the XY chain.
//!
//! In the one-excitation subspace H_XY is the N×N matrix J itself, so the
//! magnon energies ω_k and mode functions c_{i,k} are its eigenpairs. Modes
//! are labelled by their node count n − 1 and assigned the standing-wave
//! pseudo-momentum k_n = nπ/(N+1).

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{StateVector, DEFAULT_MAX_SPINS};
use crate::error::{Error, Result};
use crate::ionchain::CouplingMatrix;

/// Components below this fraction of the largest |c| count as zeros when
/// counting nodes.
pub const NODE_THRESHOLD: f64 = 1e-8;

/// Relative eigenvalue spacing below which two modes count as degenerate.
const DEGENERACY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum Labeling {
    /// Node counts are exactly {0, …, N−1}.
    Unique,
    /// Degenerate or irregular modes; labels follow node count, then energy.
    Ambiguous(String),
}

/// Magnon eigenmodes ordered by node count (mode n = index + 1).
#[derive(Clone, Debug)]
pub struct MagnonSpectrum {
    energies: Vec<f64>,
    modes: DMatrix<f64>,
    node_counts: Vec<usize>,
    pseudo_momenta: Vec<f64>,
    energy_shift: f64,
    labeling: Labeling,
}

/// Sign changes along the chain, ignoring near-zero components.
pub fn count_nodes(c: &[f64]) -> usize {
    let max = c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let cut = NODE_THRESHOLD * max;
    let mut last = 0.0_f64;
    let mut nodes = 0;
    for &v in c.iter().filter(|v| v.abs() > cut) {
        if last != 0.0 && v.signum() != last {
            nodes += 1;
        }
        last = v.signum();
    }
    nodes
}

/// Eigenmodes of the single-excitation block of H_XY.
pub fn diagonalize_magnons(j: &CouplingMatrix) -> MagnonSpectrum {
    let n = j.n();
    let eig = SymmetricEigen::new(j.values().clone());
    let mut entries: Vec<(usize, f64, Vec<f64>)> = (0..n)
        .map(|k| {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            if let Some(first) = v.iter().find(|x| x.abs() > NODE_THRESHOLD * max) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            (count_nodes(&v), eig.eigenvalues[k], v)
        })
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));

    let mut problems = Vec::new();
    let counts: Vec<usize> = entries.iter().map(|e| e.0).collect();
    if counts.iter().enumerate().any(|(i, &c)| c != i) {
        problems.push(format!("node counts {counts:?} are not a permutation of 0..{n}"));
    }
    let mut sorted: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let scale = j.max_abs().max(f64::MIN_POSITIVE);
    if sorted.windows(2).any(|w| (w[1] - w[0]).abs() < DEGENERACY_TOLERANCE * scale) {
        problems.push("degenerate eigenvalues".to_string());
    }

    let theta = std::f64::consts::PI / (n + 1) as f64;
    MagnonSpectrum {
        energies: entries.iter().map(|e| e.1).collect(),
        modes: DMatrix::from_fn(n, n, |i, k| entries[k].2[i]),
        node_counts: counts,
        pseudo_momenta: (1..=n).map(|m| m as f64 * theta).collect(),
        energy_shift: 0.0,
        labeling: if problems.is_empty() { Labeling::Unique } else { Labeling::Ambiguous(problems.join("; ")) },
    }
}

impl MagnonSpectrum {
    pub fn n(&self) -> usize {
        self.energies.len()
    }

    /// ω_k in rad/s, ordered by node count.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Mode function of mode index `k` (0-based, k = n − 1).
    pub fn mode(&self, k: usize) -> Vec<f64> {
        self.modes.column(k).iter().copied().collect()
    }

    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn node_counts(&self) -> &[usize] {
        &self.node_counts
    }

    pub fn pseudo_momenta(&self) -> &[f64] {
        &self.pseudo_momenta
    }

    pub fn labeling(&self) -> &Labeling {
        &self.labeling
    }

    /// Transverse-field offset (rad/s) the plotted dispersion is shifted by.
    /// Bookkeeping only: the energies above exclude it.
    pub fn energy_shift(&self) -> f64 {
        self.energy_shift
    }

    pub fn with_energy_shift(mut self, b: f64) -> Self {
        self.energy_shift = b;
        self
    }

    /// (k_n, ω_n) pairs in mode order.
    pub fn dispersion(&self) -> Vec<(f64, f64)> {
        self.pseudo_momenta.iter().copied().zip(self.energies.iter().copied()).collect()
    }

    /// Σ_k ω_k c_ik c_jk; reproduces J for a complete spectrum.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.energies));
        &self.modes * d * self.modes.transpose()
    }

    /// Largest forward difference of ω over adjacent pseudo-momenta,
    /// scaled by (N+1)/π, in sites per second.
    pub fn max_group_velocity(&self) -> f64 {
        let scale = (self.n() + 1) as f64 / std::f64::consts::PI;
        self.energies.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max) * scale
    }

    /// Propagates an arbitrary one-excitation state by `t` (any sign).
    pub fn propagate(&self, state: &SingleExcitationState, t: f64) -> SingleExcitationState {
        let n = self.n();
        let phases: Vec<Complex64> = (0..n)
            .map(|k| {
                let overlap: Complex64 = (0..n).map(|i| state.amplitudes[i] * self.modes[(i, k)]).sum();
                overlap * Complex64::from_polar(1.0, -self.energies[k] * t)
            })
            .collect();
        let amplitudes = (0..n)
            .map(|i| (0..n).map(|k| phases[k] * self.modes[(i, k)]).sum())
            .collect();
        SingleExcitationState { amplitudes, time: state.time + t }
    }

    /// Exact evolution of a single flipped spin at `site` (0-based).
    pub fn evolve(&self, site: usize, times: &[f64]) -> Result<Vec<SingleExcitationState>> {
        let n = self.n();
        if site >= n {
            return Err(Error::param("quench_site", format!("site {site} out of range for N = {n}")));
        }
        let start = SingleExcitationState::localized(n, site);
        Ok(times.par_iter().map(|&t| self.propagate(&start, t)).collect())
    }
}

/// Maximal group velocity of a spectrum, sites/s.
pub fn max_group_velocity(spectrum: &MagnonSpectrum) -> f64 {
    spectrum.max_group_velocity()
}

/// a_i(t) = Σ_k c_ik c_ℓk e^{−iω_k t} for a spin flipped at `site` (0-based).
pub fn evolve_single_excitation(j: &CouplingMatrix, site: usize, times: &[f64]) -> Result<Vec<SingleExcitationState>> {
    diagonalize_magnons(j).evolve(site, times)
}

/// One excitation delocalised over the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleExcitationState {
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl SingleExcitationState {
    pub fn localized(n: usize, site: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n];
        amplitudes[site] = Complex64::new(1.0, 0.0);
        Self { amplitudes, time: 0.0 }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨σ_i^z⟩ = 2|a_i|² − 1.
    pub fn magnetisation(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| 2.0 * a.norm_sqr() - 1.0).collect()
    }

    /// Connected σ^z correlations: C_ij = −4p_ip_j off the diagonal and
    /// 4p_i(1 − p_i) on it, with p_i = |a_i|².
    pub fn correlations(&self) -> DMatrix<f64> {
        let p: Vec<f64> = self.amplitudes.iter().map(|a| a.norm_sqr()).collect();
        let n = p.len();
        DMatrix::from_fn(n, n, |i, j| if i == j { 4.0 * p[i] * (1.0 - p[i]) } else { -4.0 * p[i] * p[j] })
    }

    /// The same state in the full 2^N space (amplitude a_i on basis state 1 << i).
    pub fn embed(&self) -> Result<StateVector> {
        let n = self.amplitudes.len();
        if n > DEFAULT_MAX_SPINS {
            return Err(Error::TooManySpins { n, max: DEFAULT_MAX_SPINS });
        }
        let mut full = vec![Complex64::new(0.0, 0.0); 1 << n];
        for (i, a) in self.amplitudes.iter().enumerate() {
            full[1 << i] = *a;
        }
        StateVector::new(n, full)
    }
}

pub fn magnetisation_single(state: &SingleExcitationState) -> Vec<f64> {
    state.magnetisation()
}
