use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use super::hamiltonian::Hamiltonian;
use super::state::StateVector;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Spectral for N ≤ `dense_max_spins`, Krylov above.
    Auto,
    Spectral,
    Krylov,
}

#[derive(Clone, Debug)]
pub struct EvolveOptions {
    pub method: Method,
    pub dense_max_spins: usize,
    /// Per-substep bound on the Lanczos error estimate (state norm 1).
    pub tolerance: f64,
    pub max_krylov_dim: usize,
    pub max_substeps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { method: Method::Auto, dense_max_spins: 12, tolerance: 1e-9, max_krylov_dim: 40, max_substeps: 100_000 }
    }
}

/// States sampled on a strictly increasing time grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

impl Trajectory {
    pub fn magnetisation(&self) -> Vec<Vec<f64>> {
        self.states.iter().map(super::observables::magnetisation).collect()
    }

    pub fn correlations(&self) -> Vec<DMatrix<f64>> {
        self.states.iter().map(super::observables::two_point_correlations).collect()
    }
}

/// e^{−iHt}|ψ⟩ at every requested time, with default options.
pub fn evolve(state: &StateVector, h: &Hamiltonian, times: &[f64]) -> Result<Trajectory> {
    evolve_with(state, h, times, &EvolveOptions::default())
}

pub fn evolve_with(state: &StateVector, h: &Hamiltonian, times: &[f64], opts: &EvolveOptions) -> Result<Trajectory> {
    let states = evolve_map(state, h, times, opts, |_, s| s.clone())?;
    Ok(Trajectory { times: times.to_vec(), states })
}

/// Evolves and applies `observe` at each time without keeping the states.
pub fn evolve_map<T, F>(state: &StateVector, h: &Hamiltonian, times: &[f64], opts: &EvolveOptions, observe: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(f64, &StateVector) -> T + Sync,
{
    if state.n() != h.n() {
        return Err(Error::InvalidState(format!("state has {} spins, Hamiltonian {}", state.n(), h.n())));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("times", "must be finite and strictly increasing"));
    }
    let spectral = match opts.method {
        Method::Auto => h.n() <= opts.dense_max_spins,
        Method::Spectral => true,
        Method::Krylov => false,
    };
    if spectral {
        let prop = SpectralPropagator::new(h, state);
        Ok(times
            .par_iter()
            .map(|&t| {
                if t == 0.0 {
                    observe(t, state)
                } else {
                    observe(t, &prop.at(t))
                }
            })
            .collect())
    } else {
        let mut out = Vec::with_capacity(times.len());
        let mut current = state.clone();
        let mut now = 0.0;
        for &t in times {
            if t != now {
                krylov_advance(h, &mut current, t - now, opts)?;
                now = t;
            }
            if t == 0.0 {
                out.push(observe(t, state));
            } else {
                out.push(observe(t, &current));
            }
        }
        Ok(out)
    }
}

/// Eigendecomposition of every conserved-sector block the initial state
/// touches.
struct SpectralPropagator {
    n: usize,
    blocks: Vec<Block>,
}

struct Block {
    basis: Vec<usize>,
    energies: DVector<f64>,
    vectors: DMatrix<f64>,
    coefficients: Vec<Complex64>,
}

impl SpectralPropagator {
    fn new(h: &Hamiltonian, state: &StateVector) -> Self {
        let amps = state.amplitudes();
        let blocks = h
            .sectors()
            .into_iter()
            .filter(|basis| basis.iter().any(|&b| amps[b] != ZERO))
            .map(|basis| {
                let eig = SymmetricEigen::new(h.dense_block(&basis));
                let coefficients = (0..basis.len())
                    .map(|k| basis.iter().enumerate().map(|(r, &b)| amps[b] * eig.eigenvectors[(r, k)]).sum())
                    .collect();
                Block { basis, energies: eig.eigenvalues, vectors: eig.eigenvectors, coefficients }
            })
            .collect();
        Self { n: state.n(), blocks }
    }

    fn at(&self, t: f64) -> StateVector {
        let mut out = StateVector::basis_state(self.n, 0);
        out.amplitudes_mut()[0] = ZERO;
        let amps = out.amplitudes_mut();
        for block in &self.blocks {
            let y: Vec<Complex64> = block
                .coefficients
                .iter()
                .zip(block.energies.iter())
                .map(|(c, &e)| c * Complex64::from_polar(1.0, -e * t))
                .collect();
            for (r, &b) in block.basis.iter().enumerate() {
                amps[b] = y.iter().enumerate().map(|(k, yk)| yk * block.vectors[(r, k)]).sum();
            }
        }
        out
    }
}

/// Fixed chunking keeps the summation order, and so the rounding,
/// independent of thread scheduling.
const REDUCE_CHUNK: usize = 4096;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let partial: Vec<Complex64> = a
        .par_chunks(REDUCE_CHUNK)
        .zip(b.par_chunks(REDUCE_CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p.conj() * q).sum())
        .collect();
    partial.into_iter().sum()
}

fn norm(a: &[Complex64]) -> f64 {
    let partial: Vec<f64> = a.par_chunks(REDUCE_CHUNK).map(|x| x.iter().map(|v| v.norm_sqr()).sum()).collect();
    partial.into_iter().sum::<f64>().sqrt()
}

/// Coefficients of e^{−iTτ} e₁ for the real tridiagonal Lanczos matrix T.
fn small_exp(alpha: &[f64], beta: &[f64], tau: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i.abs_diff(j) == 1 {
            beta[i.min(j)]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    (0..m)
        .map(|k| {
            (0..m)
                .map(|l| Complex64::from_polar(eig.eigenvectors[(k, l)] * eig.eigenvectors[(0, l)], -eig.eigenvalues[l] * tau))
                .sum()
        })
        .collect()
}

/// Advances `state` by `dt` with adaptively sized Lanczos substeps.
fn krylov_advance(h: &Hamiltonian, state: &mut StateVector, dt: f64, opts: &EvolveOptions) -> Result<()> {
    let mut remaining = dt;
    let mut substeps = 0;
    let mut last_estimate = 0.0;
    while remaining != 0.0 {
        if substeps >= opts.max_substeps {
            return Err(Error::PropagatorTolerance { tolerance: opts.tolerance, estimate: last_estimate, iterations: substeps });
        }
        let (taken, estimate) = lanczos_substep(h, state, remaining, opts)?;
        last_estimate = estimate;
        remaining = if taken == remaining { 0.0 } else { remaining - taken };
        substeps += 1;
    }
    Ok(())
}

/// One Lanczos substep of at most `dt`; returns the time actually taken and
/// the error estimate.
fn lanczos_substep(h: &Hamiltonian, state: &mut StateVector, dt: f64, opts: &EvolveOptions) -> Result<(f64, f64)> {
    let v = state.amplitudes();
    let norm0 = norm(v);
    if norm0 == 0.0 {
        return Ok((dt, 0.0));
    }
    let mut basis: Vec<Vec<Complex64>> = vec![v.iter().map(|x| x / norm0).collect()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![ZERO; v.len()];
    let mut result: Option<(f64, Vec<Complex64>, f64)> = None;

    for j in 0..opts.max_krylov_dim {
        h.apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        // Full reorthogonalisation, applied twice.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                w.par_iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm(&w);
        let scale = alpha.iter().chain(beta.iter()).fold(0.0_f64, |m, x| m.max(x.abs())).max(1e-300);
        if b <= 1e-12 * scale {
            // Invariant subspace: the projection is exact.
            result = Some((dt, small_exp(&alpha, &beta, dt), 0.0));
            break;
        }
        let y = small_exp(&alpha, &beta, dt);
        let estimate = norm0 * b * y[j].norm();
        if estimate <= opts.tolerance && j >= 1 {
            result = Some((dt, y, estimate));
            break;
        }
        if j + 1 == opts.max_krylov_dim {
            // Subspace exhausted: shrink the step until the estimate passes.
            let mut tau = dt;
            for _ in 0..200 {
                tau *= 0.5;
                let y = small_exp(&alpha, &beta, tau);
                let estimate = norm0 * b * y[j].norm();
                if estimate <= opts.tolerance {
                    result = Some((tau, y, estimate));
                    break;
                }
            }
            if result.is_none() {
                return Err(Error::PropagatorTolerance { tolerance: opts.tolerance, estimate, iterations: 1 });
            }
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }

    let (taken, y, estimate) = result.expect("Lanczos loop always sets a result");
    let out = state.amplitudes_mut();
    out.par_iter_mut().enumerate().for_each(|(idx, o)| {
        *o = y.iter().zip(&basis).map(|(c, q)| c * q[idx]).sum::<Complex64>() * norm0;
    });
    Ok((taken, estimate))
}
