use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::density::{DensityMatrix, Subsystem};
use super::measures::{concurrence, fidelity, von_neumann_entropy};
use super::pauli;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    fn index(self) -> usize {
        match self {
            Axis::X => 1,
            Axis::Y => 2,
            Axis::Z => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

/// Shot counts from measuring both spins along `basis`. Outcome bins are
/// ordered (++, +−, −+, −−), where + is the +1 eigenvalue of the axis Pauli.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub basis: (Axis, Axis),
    pub shots: u64,
    pub counts: [u64; 4],
    pub seed: u64,
}

impl MeasurementRecord {
    fn correlator(&self) -> f64 {
        let [pp, pm, mp, mm] = self.counts.map(|c| c as f64);
        (pp - pm - mp + mm) / self.shots as f64
    }
}

/// Outcome probabilities (++, +−, −+, −−) for a two-spin state.
fn outcome_probabilities(rho: &DensityMatrix, basis: (Axis, Axis)) -> [f64; 4] {
    let id = pauli(None);
    let half = Complex64::new(0.5, 0.0);
    let proj = |axis: Axis, sign: f64| (&id + pauli(Some(axis)) * Complex64::new(sign, 0.0)) * half;
    let mut p = [0.0; 4];
    for (k, (s1, s2)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)].into_iter().enumerate() {
        let op = proj(basis.0, s1).kronecker(&proj(basis.1, s2));
        p[k] = (rho.matrix() * op).trace().re.max(0.0);
    }
    let total: f64 = p.iter().sum();
    p.map(|x| x / total)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn multinomial(rng: &mut ChaCha8Rng, shots: u64, probs: &[f64; 4]) -> [u64; 4] {
    let mut counts = [0u64; 4];
    let mut left = shots;
    let mut mass = 1.0;
    for k in 0..3 {
        if left == 0 {
            break;
        }
        let p = if mass > 0.0 { (probs[k] / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(left, p).expect("probability clamped to [0, 1]").sample(rng);
        counts[k] = draw;
        left -= draw;
        mass -= probs[k];
    }
    counts[3] = left;
    counts
}

/// Simulated projective measurement with multinomial projection noise.
/// Deterministic for a given `(seed, stream)`.
pub fn sample_measurements(rho: &DensityMatrix, basis: (Axis, Axis), shots: u64, seed: u64, stream: u64) -> Result<MeasurementRecord> {
    if rho.dim() != 4 {
        return Err(Error::Tomography("measurement simulation needs a two-spin state".into()));
    }
    if shots == 0 {
        return Err(Error::param("shots", "must be at least 1"));
    }
    let probs = outcome_probabilities(rho, basis);
    let counts = multinomial(&mut stream_rng(seed, stream), shots, &probs);
    Ok(MeasurementRecord { basis, shots, counts, seed })
}

/// The nine product bases {x,y,z}², each sampled on its own RNG stream.
pub fn measure_all_bases(rho: &DensityMatrix, shots: u64, seed: u64) -> Result<Vec<MeasurementRecord>> {
    let mut out = Vec::with_capacity(9);
    for (k, (a, b)) in Axis::ALL.iter().flat_map(|&a| Axis::ALL.iter().map(move |&b| (a, b))).enumerate() {
        out.push(sample_measurements(rho, (a, b), shots, seed, k as u64)?);
    }
    Ok(out)
}

/// The 16 two-spin Pauli expectations ⟨σ_μ ⊗ σ_ν⟩, μ, ν ∈ {I, x, y, z}.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliExpectations(pub [[f64; 4]; 4]);

impl PauliExpectations {
    pub fn exact(rho: &DensityMatrix) -> Self {
        let axes = [None, Some(Axis::X), Some(Axis::Y), Some(Axis::Z)];
        let mut e = [[0.0; 4]; 4];
        for (m, &a) in axes.iter().enumerate() {
            for (n, &b) in axes.iter().enumerate() {
                e[m][n] = (rho.matrix() * pauli(a).kronecker(&pauli(b))).trace().re;
            }
        }
        Self(e)
    }

    /// Estimates from the nine records. Single-spin terms pool the marginals
    /// of the three records sharing that spin's axis.
    pub fn from_records(records: &[MeasurementRecord]) -> Result<Self> {
        let mut e = [[0.0; 4]; 4];
        e[0][0] = 1.0;
        let mut seen = [[false; 4]; 4];
        let mut first = [(0.0, 0.0); 4];
        let mut second = [(0.0, 0.0); 4];
        for r in records {
            if r.shots == 0 || r.counts.iter().sum::<u64>() != r.shots {
                return Err(Error::Tomography(format!("record {:?} has inconsistent shots", r.basis)));
            }
            let (a, b) = (r.basis.0.index(), r.basis.1.index());
            if seen[a][b] {
                return Err(Error::Tomography(format!("duplicate basis {:?}", r.basis)));
            }
            seen[a][b] = true;
            e[a][b] = r.correlator();
            let [pp, pm, mp, mm] = r.counts.map(|c| c as f64);
            first[a].0 += pp + pm - mp - mm;
            first[a].1 += r.shots as f64;
            second[b].0 += pp - pm + mp - mm;
            second[b].1 += r.shots as f64;
        }
        for a in Axis::ALL {
            for b in Axis::ALL {
                if !seen[a.index()][b.index()] {
                    return Err(Error::Tomography(format!("missing basis ({}, {})", a.name(), b.name())));
                }
            }
        }
        for k in 1..4 {
            e[k][0] = first[k].0 / first[k].1;
            e[0][k] = second[k].0 / second[k].1;
        }
        Ok(Self(e))
    }

    /// Linear inversion ρ = ¼ Σ ⟨σ_μσ_ν⟩ σ_μ⊗σ_ν, then PSD projection.
    pub fn reconstruct(&self, subsystem: Subsystem) -> Result<DensityMatrix> {
        let axes = [None, Some(Axis::X), Some(Axis::Y), Some(Axis::Z)];
        let mut m = DMatrix::<Complex64>::zeros(4, 4);
        for (i, &a) in axes.iter().enumerate() {
            for (j, &b) in axes.iter().enumerate() {
                m += pauli(a).kronecker(&pauli(b)) * Complex64::new(self.0[i][j] / 4.0, 0.0);
            }
        }
        DensityMatrix::project_physical(m, subsystem)
    }
}

/// Linear-inversion tomography from the nine product-basis records.
pub fn tomography_reconstruct(records: &[MeasurementRecord], subsystem: Subsystem) -> Result<DensityMatrix> {
    PauliExpectations::from_records(records)?.reconstruct(subsystem)
}

/// Quantity recomputed on every bootstrap resample.
#[derive(Clone, Debug, PartialEq)]
pub enum Statistic {
    Concurrence,
    /// Entropy of the reconstructed two-spin state, bits.
    Entropy,
    /// Entropy of one spin (0 = first, 1 = second) of the pair, bits.
    SiteEntropy(usize),
    Fidelity(Vec<Complex64>),
}

impl Statistic {
    pub fn evaluate(&self, rho: &DensityMatrix) -> Result<f64> {
        match self {
            Statistic::Concurrence => concurrence(rho),
            Statistic::Entropy => von_neumann_entropy(rho),
            Statistic::SiteEntropy(k) => von_neumann_entropy(&rho.partial_trace(*k)?),
            Statistic::Fidelity(target) => fidelity(rho, target),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub mean: f64,
    pub sigma: f64,
    pub resamples: usize,
}

/// Parametric bootstrap over multinomial resamples of every record.
///
/// Resample `r` draws from RNG stream `r` of `seed`, so the result does not
/// depend on how the work is scheduled.
pub fn bootstrap(records: &[MeasurementRecord], resamples: usize, statistic: &Statistic, seed: u64) -> Result<BootstrapResult> {
    if resamples < 100 {
        return Err(Error::param("resamples", format!("need at least 100, got {resamples}")));
    }
    let subsystem = Subsystem::Pair(0, 1);
    PauliExpectations::from_records(records)?;
    let values: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let resampled: Vec<MeasurementRecord> = records
                .iter()
                .map(|rec| {
                    let probs = rec.counts.map(|c| c as f64 / rec.shots as f64);
                    MeasurementRecord { counts: multinomial(&mut rng, rec.shots, &probs), ..rec.clone() }
                })
                .collect();
            statistic.evaluate(&tomography_reconstruct(&resampled, subsystem)?)
        })
        .collect::<Result<_>>()?;
    let mean = values.iter().sum::<f64>() / resamples as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Ok(BootstrapResult { mean, sigma: var.sqrt(), resamples })
}
