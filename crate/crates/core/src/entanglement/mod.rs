//! Reduced density matrices, entanglement measures and simulated two-qubit
//! tomography with projection noise.
//!
//! Single-spin matrices use the basis (|↓⟩, |↑⟩); two-spin matrices use
//! (|↓↓⟩, |↓↑⟩, |↑↓⟩, |↑↑⟩) with the first listed site as the leading factor.

mod density;
mod measures;
mod tomography;

pub use density::{reduced_density_matrix, DensityMatrix, Subsystem};
pub use measures::{concurrence, fidelity, von_neumann_entropy};
pub use tomography::{
    bootstrap, measure_all_bases, sample_measurements, tomography_reconstruct, Axis, BootstrapResult,
    MeasurementRecord, PauliExpectations, Statistic,
};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Single-qubit operators in the (|↓⟩, |↑⟩) basis.
pub(crate) fn pauli(axis: Option<Axis>) -> DMatrix<Complex64> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    match axis {
        None => DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
        Some(Axis::X) => DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
        // σ^y = −i(σ^+ − σ^−) with σ^+ = |↑⟩⟨↓|.
        Some(Axis::Y) => DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, 0.0)]),
        Some(Axis::Z) => DMatrix::from_row_slice(2, 2, &[c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
    }
}
