use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::density::{DensityMatrix, PSD_TOLERANCE};
use super::{pauli, Axis};
use crate::error::{Error, Result};

fn checked_eigen(rho: &DensityMatrix) -> Result<SymmetricEigen<Complex64, nalgebra::Dyn>> {
    let eig = SymmetricEigen::new(rho.matrix().clone());
    if let Some(l) = eig.eigenvalues.iter().copied().find(|&l| l < -PSD_TOLERANCE) {
        return Err(Error::InvalidState(format!("negative eigenvalue {l:.3e}")));
    }
    Ok(eig)
}

/// Von Neumann entropy in bits, −Σ λ log₂ λ.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let eig = checked_eigen(rho)?;
    Ok(eig
        .eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.log2())
        .sum::<f64>()
        .max(0.0))
}

/// Rounding floor for eigenvalues of a unit-trace matrix before square roots.
const EIGEN_FLOOR: f64 = 1e-14;

/// Wootters concurrence of a two-qubit state.
///
/// The λ_i are the square roots of the eigenvalues of ρρ̃ with
/// ρ̃ = (σ^y⊗σ^y) ρ* (σ^y⊗σ^y). They are obtained as the singular values of
/// √ρ (σ^y⊗σ^y) √ρ*, which avoids a second square root.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::InvalidState("concurrence needs a two-qubit state".into()));
    }
    let eig = checked_eigen(rho)?;
    let v = &eig.eigenvectors;
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|&l| if l > EIGEN_FLOOR { l.sqrt() } else { 0.0 }).collect();
    let sqrt_rho = DMatrix::from_fn(4, 4, |i, j| {
        (0..4).map(|k| v[(i, k)] * v[(j, k)].conj() * roots[k]).sum::<Complex64>()
    });
    let y = pauli(Some(Axis::Y));
    let yy = y.kronecker(&y);
    let a = &sqrt_rho * yy * sqrt_rho.map(|z| z.conj());
    let mut lambdas: Vec<f64> = a.singular_values().iter().copied().collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).clamp(0.0, 1.0))
}

/// F = ⟨ψ|ρ|ψ⟩ against a pure target.
pub fn fidelity(rho: &DensityMatrix, target: &[Complex64]) -> Result<f64> {
    if target.len() != rho.dim() {
        return Err(Error::param("target", format!("dimension {} does not match state dimension {}", target.len(), rho.dim())));
    }
    let m = rho.matrix();
    let mut f = Complex64::new(0.0, 0.0);
    for i in 0..target.len() {
        for j in 0..target.len() {
            f += target[i].conj() * m[(i, j)] * target[j];
        }
    }
    Ok(f.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::Subsystem;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bell() -> Vec<Complex64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        vec![c(h), c(0.0), c(0.0), c(h)]
    }

    fn werner(p: f64) -> DensityMatrix {
        let b = DensityMatrix::pure(&bell(), Subsystem::Pair(0, 1)).unwrap();
        let mixed = DensityMatrix::maximally_mixed(Subsystem::Pair(0, 1));
        let m = b.matrix() * c(p) + mixed.matrix() * c(1.0 - p);
        DensityMatrix::new(m, Subsystem::Pair(0, 1)).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let pure = DensityMatrix::pure(&[c(0.6), c(0.8)], Subsystem::Site(0)).unwrap();
        assert!(von_neumann_entropy(&pure).unwrap().abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(Subsystem::Site(0));
        assert!((von_neumann_entropy(&mixed).unwrap() - 1.0).abs() < 1e-12);
        let m = DMatrix::from_row_slice(2, 2, &[c(0.9), c(0.0), c(0.0), c(0.1)]);
        let r = DensityMatrix::new(m, Subsystem::Site(0)).unwrap();
        // h(0.1) = −0.1 log₂ 0.1 − 0.9 log₂ 0.9
        let h: f64 = -0.1 * 0.1_f64.log2() - 0.9 * 0.9_f64.log2();
        assert!((von_neumann_entropy(&r).unwrap() - h).abs() < 1e-12);
        assert!((h - 0.468996).abs() < 1e-6);
        assert!((von_neumann_entropy(&DensityMatrix::maximally_mixed(Subsystem::Pair(0, 1))).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_rejects_negative_states() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.1), c(0.0), c(0.0), c(-0.1)]);
        let r = DensityMatrix::new(m, Subsystem::Site(0)).unwrap();
        assert!(von_neumann_entropy(&r).is_err());
        let mut big = DMatrix::<Complex64>::zeros(4, 4);
        big[(0, 0)] = c(1.2);
        big[(1, 1)] = c(-0.2);
        assert!(concurrence(&DensityMatrix::new(big, Subsystem::Pair(0, 1)).unwrap()).is_err());
    }

    #[test]
    fn concurrence_examples() {
        let b = DensityMatrix::pure(&bell(), Subsystem::Pair(0, 1)).unwrap();
        assert!((concurrence(&b).unwrap() - 1.0).abs() < 1e-10);
        let prod = DensityMatrix::pure(&[c(0.0), c(1.0), c(0.0), c(0.0)], Subsystem::Pair(0, 1)).unwrap();
        assert!(concurrence(&prod).unwrap() < 1e-10);
        for p in [0.0, 0.2, 1.0 / 3.0, 0.5, 0.8, 1.0] {
            let expect = ((3.0 * p - 1.0) / 2.0_f64).max(0.0);
            assert!((concurrence(&werner(p)).unwrap() - expect).abs() < 1e-10, "p={p}");
        }
        assert!(concurrence(&DensityMatrix::maximally_mixed(Subsystem::Site(0))).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let b = DensityMatrix::pure(&bell(), Subsystem::Pair(0, 1)).unwrap();
        assert!((fidelity(&b, &bell()).unwrap() - 1.0).abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(Subsystem::Pair(0, 1));
        assert!((fidelity(&mixed, &bell()).unwrap() - 0.25).abs() < 1e-15);
        assert!(fidelity(&mixed, &[c(1.0), c(0.0)]).is_err());
    }

    fn rotation(theta: f64, phi: f64, lambda: f64) -> DMatrix<Complex64> {
        let (s, co) = (theta / 2.0).sin_cos();
        DMatrix::from_row_slice(2, 2, &[
            c(co),
            -Complex64::from_polar(s, lambda),
            Complex64::from_polar(s, phi),
            Complex64::from_polar(co, phi + lambda),
        ])
    }

    proptest! {
        #[test]
        fn local_unitary_invariance(
            amps in proptest::collection::vec(-1.0f64..1.0, 8),
            angles in proptest::collection::vec(0.0f64..6.3, 6),
        ) {
            let psi: Vec<Complex64> = (0..4).map(|k| Complex64::new(amps[2 * k], amps[2 * k + 1])).collect();
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-3);
            let psi: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
            let u = rotation(angles[0], angles[1], angles[2]).kronecker(&rotation(angles[3], angles[4], angles[5]));
            let rotated = &u * nalgebra::DVector::from_column_slice(&psi);
            let a = DensityMatrix::pure(&psi, Subsystem::Pair(0, 1)).unwrap();
            let b = DensityMatrix::pure(rotated.as_slice(), Subsystem::Pair(0, 1)).unwrap();
            prop_assert!((concurrence(&a).unwrap() - concurrence(&b).unwrap()).abs() < 1e-8);
            let sa = von_neumann_entropy(&a.partial_trace(0).unwrap()).unwrap();
            let sb = von_neumann_entropy(&b.partial_trace(0).unwrap()).unwrap();
            prop_assert!((sa - sb).abs() < 1e-8);
            // Pure two-qubit states: C = 2|ad − bc|.
            let exact = 2.0 * (psi[0] * psi[3] - psi[1] * psi[2]).norm();
            prop_assert!((concurrence(&a).unwrap() - exact).abs() < 1e-8);
        }
    }
}
