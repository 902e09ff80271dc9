use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::state::StateVector;
use crate::error::{Error, Result};
use crate::ionchain::CouplingMatrix;

/// Default cap on the number of spins for full-Hilbert-space work.
pub const DEFAULT_MAX_SPINS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Σ_{i<j} J_ij σ^x_i σ^x_j + B Σ_i σ^z_i
    Ising,
    /// Σ_{i<j} J_ij (σ^+_i σ^-_j + σ^-_i σ^+_j); B is a constant here and dropped.
    Xy,
}

/// Matrix-free Hamiltonian on the 2^N σ^z product basis. Real symmetric.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    n: usize,
    model: Model,
    field: f64,
    bonds: Vec<(usize, usize, f64)>,
}

pub fn build_hamiltonian(j: &CouplingMatrix, field: f64, model: Model) -> Result<Hamiltonian> {
    build_hamiltonian_with_limit(j, field, model, DEFAULT_MAX_SPINS)
}

pub fn build_hamiltonian_with_limit(j: &CouplingMatrix, field: f64, model: Model, max_spins: usize) -> Result<Hamiltonian> {
    let n = j.n();
    if n > max_spins || n >= usize::BITS as usize - 1 {
        return Err(Error::TooManySpins { n, max: max_spins });
    }
    if !field.is_finite() {
        return Err(Error::param("transverse_field", "must be finite"));
    }
    let mut bonds = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let v = j.get(a, b);
            if v != 0.0 {
                bonds.push((a, b, v));
            }
        }
    }
    Ok(Hamiltonian { n, model, field: if model == Model::Xy { 0.0 } else { field }, bonds })
}

impl Hamiltonian {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn field(&self) -> f64 {
        self.field
    }

    #[inline]
    fn diagonal(&self, bits: usize) -> f64 {
        if self.field == 0.0 {
            return 0.0;
        }
        let up = bits.count_ones() as f64;
        self.field * (2.0 * up - self.n as f64)
    }

    #[inline]
    fn connects(&self, bits: usize, a: usize, b: usize) -> bool {
        match self.model {
            Model::Ising => true,
            Model::Xy => ((bits >> a) ^ (bits >> b)) & 1 == 1,
        }
    }

    /// out = H · input.
    pub fn apply(&self, input: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(input.len(), self.dim());
        out.par_iter_mut().enumerate().for_each(|(bits, o)| {
            let mut acc = input[bits] * self.diagonal(bits);
            for &(a, b, v) in &self.bonds {
                if self.connects(bits, a, b) {
                    acc += input[bits ^ (1 << a) ^ (1 << b)] * v;
                }
            }
            *o = acc;
        });
    }

    /// ⟨ψ|H|ψ⟩.
    pub fn expectation(&self, state: &StateVector) -> f64 {
        let mut hv = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply(state.amplitudes(), &mut hv);
        state.amplitudes().iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Label of the conserved sector containing `bits`: excitation number for
    /// XY, excitation-number parity for Ising.
    pub fn sector_of(&self, bits: usize) -> usize {
        match self.model {
            Model::Xy => bits.count_ones() as usize,
            Model::Ising => (bits.count_ones() & 1) as usize,
        }
    }

    /// Basis states grouped by conserved sector, each in ascending order.
    pub fn sectors(&self) -> Vec<Vec<usize>> {
        let count = match self.model {
            Model::Xy => self.n + 1,
            Model::Ising => 2,
        };
        let mut out = vec![Vec::new(); count];
        for bits in 0..self.dim() {
            out[self.sector_of(bits)].push(bits);
        }
        out
    }

    /// Dense real block of H restricted to the listed basis states.
    pub fn dense_block(&self, basis: &[usize]) -> DMatrix<f64> {
        let mut index = std::collections::HashMap::with_capacity(basis.len());
        for (k, &b) in basis.iter().enumerate() {
            index.insert(b, k);
        }
        let mut m = DMatrix::zeros(basis.len(), basis.len());
        for (k, &bits) in basis.iter().enumerate() {
            m[(k, k)] = self.diagonal(bits);
            for &(a, b, v) in &self.bonds {
                if self.connects(bits, a, b) {
                    if let Some(&l) = index.get(&(bits ^ (1 << a) ^ (1 << b))) {
                        m[(l, k)] += v;
                    }
                }
            }
        }
        m
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let all: Vec<usize> = (0..self.dim()).collect();
        self.dense_block(&all)
    }
}
