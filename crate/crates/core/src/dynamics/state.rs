use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Initial-state preparation. Sites are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum QuenchSpec {
    /// All spins down except `flipped_sites`, which are up.
    Local { flipped_sites: Vec<usize> },
    /// Every spin in (|↓⟩ + |↑⟩)/√2.
    Global,
}

impl QuenchSpec {
    pub fn local(sites: impl IntoIterator<Item = usize>) -> Self {
        QuenchSpec::Local { flipped_sites: sites.into_iter().collect() }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let QuenchSpec::Local { flipped_sites } = self {
            let mut seen = vec![false; n];
            for &s in flipped_sites {
                if s >= n {
                    return Err(Error::param("flipped_sites", format!("site {s} out of range for N = {n}")));
                }
                if std::mem::replace(&mut seen[s], true) {
                    return Err(Error::param("flipped_sites", format!("site {s} listed twice")));
                }
            }
        }
        Ok(())
    }
}

/// Pure state of N spins in the σ^z product basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1usize << n {
            return Err(Error::InvalidState(format!("expected 2^{n} amplitudes, got {}", amplitudes.len())));
        }
        Ok(Self { n, amplitudes })
    }

    pub fn basis_state(n: usize, bits: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        amplitudes[bits] = Complex64::new(1.0, 0.0);
        Self { n, amplitudes }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }
}

pub fn prepare_state(spec: &QuenchSpec, n: usize) -> Result<StateVector> {
    spec.validate(n)?;
    Ok(match spec {
        QuenchSpec::Local { flipped_sites } => {
            StateVector::basis_state(n, flipped_sites.iter().fold(0, |bits, s| bits | (1 << s)))
        }
        QuenchSpec::Global => {
            let a = Complex64::new((0.5_f64).powf(n as f64 / 2.0), 0.0);
            StateVector { n, amplitudes: vec![a; 1 << n] }
        }
    })
}
