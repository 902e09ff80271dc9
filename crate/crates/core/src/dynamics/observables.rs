use nalgebra::DMatrix;

use super::state::StateVector;

#[inline]
fn spin(bits: usize, site: usize) -> f64 {
    if (bits >> site) & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// ⟨σ_i^z⟩ for every site.
pub fn magnetisation(state: &StateVector) -> Vec<f64> {
    let n = state.n();
    let mut m = vec![0.0; n];
    for (bits, a) in state.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        for (i, mi) in m.iter_mut().enumerate() {
            *mi += p * spin(bits, i);
        }
    }
    m
}

/// Connected correlations C_ij = ⟨σ_i^z σ_j^z⟩ − ⟨σ_i^z⟩⟨σ_j^z⟩.
pub fn two_point_correlations(state: &StateVector) -> DMatrix<f64> {
    let n = state.n();
    let mut zz = DMatrix::<f64>::zeros(n, n);
    for (bits, a) in state.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        for i in 0..n {
            let si = spin(bits, i);
            for j in i..n {
                zz[(i, j)] += p * si * spin(bits, j);
            }
        }
    }
    let m = magnetisation(state);
    DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        zz[(a, b)] - m[i] * m[j]
    })
}

/// C̄_n = (1/(N−n)) Σ_i C_{i,i+n} for n = 1 … N−1.
pub fn averaged_correlations(c: &DMatrix<f64>) -> Vec<f64> {
    let n = c.nrows();
    (1..n).map(|d| (0..n - d).map(|i| c[(i, i + d)]).sum::<f64>() / (n - d) as f64).collect()
}

/// Probability weight in each excitation-number sector 0 … N.
pub fn excitation_distribution(state: &StateVector) -> Vec<f64> {
    let mut w = vec![0.0; state.n() + 1];
    for (bits, a) in state.amplitudes().iter().enumerate() {
        w[bits.count_ones() as usize] += a.norm_sqr();
    }
    w
}

/// Weight outside the excitation-number sector `sector`.
pub fn sector_leakage(state: &StateVector, sector: usize) -> f64 {
    let w = excitation_distribution(state);
    w.iter().enumerate().filter(|(k, _)| *k != sector).map(|(_, p)| p).sum()
}
