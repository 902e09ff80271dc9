use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::StateVector;
use crate::error::{Error, Result};

/// Which spins a reduced state describes (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    Site(usize),
    Pair(usize, usize),
}

impl Subsystem {
    pub fn dim(self) -> usize {
        match self {
            Subsystem::Site(_) => 2,
            Subsystem::Pair(..) => 4,
        }
    }

    /// Tag with 1-based sites, e.g. `sites=3,5`.
    pub fn tag(self) -> String {
        match self {
            Subsystem::Site(a) => format!("sites={}", a + 1),
            Subsystem::Pair(a, b) => format!("sites={},{}", a + 1, b + 1),
        }
    }
}

/// Hermitian, unit-trace one- or two-spin density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
    subsystem: Subsystem,
}

const HERMITIAN_TOLERANCE: f64 = 1e-10;
/// Eigenvalues down to this are treated as rounding noise.
pub(crate) const PSD_TOLERANCE: f64 = 1e-8;

impl DensityMatrix {
    pub fn new(matrix: DMatrix<Complex64>, subsystem: Subsystem) -> Result<Self> {
        let dim = subsystem.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidState(format!("expected {dim}x{dim}, got {}x{}", matrix.nrows(), matrix.ncols())));
        }
        let herm = (&matrix - matrix.adjoint()).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        if herm > HERMITIAN_TOLERANCE {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = matrix.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > HERMITIAN_TOLERANCE {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        Ok(Self { matrix, subsystem })
    }

    /// |ψ⟩⟨ψ| for a normalized 2- or 4-component vector.
    pub fn pure(psi: &[Complex64], subsystem: Subsystem) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(psi);
        Self::new(&v * v.adjoint(), subsystem)
    }

    pub fn maximally_mixed(subsystem: Subsystem) -> Self {
        let d = subsystem.dim();
        let m = DMatrix::from_fn(d, d, |i, j| if i == j { Complex64::new(1.0 / d as f64, 0.0) } else { Complex64::new(0.0, 0.0) });
        Self { matrix: m, subsystem }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn subsystem(&self) -> Subsystem {
        self.subsystem
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(self.matrix.clone()).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// Nearest PSD unit-trace matrix by eigenvalue clipping.
    pub fn project_physical(matrix: DMatrix<Complex64>, subsystem: Subsystem) -> Result<Self> {
        // Symmetrise first so the eigensolver sees an exactly Hermitian input.
        let herm = (&matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(herm);
        let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        if total <= 0.0 {
            return Err(Error::Tomography("reconstruction has no positive weight".into()));
        }
        let d = clipped.len();
        let v = &eig.eigenvectors;
        let m = DMatrix::from_fn(d, d, |i, j| (0..d).map(|k| v[(i, k)] * v[(j, k)].conj() * (clipped[k] / total)).sum());
        Self::new(m, subsystem)
    }

    /// Partial trace of a two-spin state onto its first (`0`) or second (`1`) spin.
    pub fn partial_trace(&self, keep: usize) -> Result<Self> {
        let (a, b) = match self.subsystem {
            Subsystem::Pair(a, b) => (a, b),
            Subsystem::Site(_) => return Err(Error::InvalidState("already a single-spin state".into())),
        };
        let m = &self.matrix;
        let out = DMatrix::from_fn(2, 2, |i, j| {
            (0..2)
                .map(|k| if keep == 0 { m[(2 * i + k, 2 * j + k)] } else { m[(2 * k + i, 2 * k + j)] })
                .sum()
        });
        Self::new(out, Subsystem::Site(if keep == 0 { a } else { b }))
    }
}

/// Exact reduced state of one or two sites.
pub fn reduced_density_matrix(state: &StateVector, sites: &[usize]) -> Result<DensityMatrix> {
    let n = state.n();
    let subsystem = match *sites {
        [a] if a < n => Subsystem::Site(a),
        [a, b] if a < n && b < n && a != b => Subsystem::Pair(a, b),
        _ => return Err(Error::param("sites", format!("need one or two distinct sites below {n}, got {sites:?}"))),
    };
    let k = sites.len();
    let dim = 1 << k;
    let mask = sites.iter().fold(0usize, |m, s| m | (1 << s));
    // Local index: first listed site is the most significant bit.
    let local = |bits: usize| sites.iter().fold(0usize, |acc, &s| (acc << 1) | ((bits >> s) & 1));
    let place = |l: usize| {
        sites.iter().enumerate().fold(0usize, |acc, (pos, &s)| acc | (((l >> (k - 1 - pos)) & 1) << s))
    };
    let amps = state.amplitudes();
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (bits, a) in amps.iter().enumerate() {
        if *a == Complex64::new(0.0, 0.0) {
            continue;
        }
        let row = local(bits);
        let rest = bits & !mask;
        for col in 0..dim {
            m[(row, col)] += a * amps[rest | place(col)].conj();
        }
    }
    DensityMatrix::new(m, subsystem)
}
