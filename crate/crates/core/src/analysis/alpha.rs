use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ionchain::CouplingMatrix;
use crate::magnon::diagonalize_magnons;

/// Search interval for the dispersion fit.
pub const ALPHA_RANGE: (f64, f64) = (0.0, 4.0);
/// Final golden-section bracket width.
pub const ALPHA_TOLERANCE: f64 = 1e-4;

const GRID_POINTS: usize = 41;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Dispersion,
    Realspace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitFlag {
    /// Minimum sits on the lower end of the search interval.
    LowerBound,
    /// Minimum sits on the upper end of the search interval.
    UpperBound,
    /// α ≥ 3: indistinguishable from a nearest-neighbour chain.
    ShortRange,
    /// Objective varies by less than 1e-12 across the search grid.
    FlatObjective,
    /// Pairs dropped from a log-log fit because J_ij ≤ 0.
    ExcludedPairs(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaFit {
    pub alpha: f64,
    /// Coupling scale J₀ of J₀/|i−j|^α, rad/s.
    pub scale: f64,
    /// Dispersion fit: rms of ω − ω_model in rad/s. Real-space fit: rms of
    /// the log residuals.
    pub residual: f64,
    pub method: FitMethod,
    /// Standard error of α where a linear model provides one.
    pub alpha_stderr: Option<f64>,
    pub flags: Vec<FitFlag>,
}

/// Unit-scale template dispersion, node-count order.
fn template(n: usize, alpha: f64) -> Vec<f64> {
    let j = CouplingMatrix::power_law(n, 1.0, alpha).expect("power-law template is valid");
    diagonalize_magnons(&j).energies().to_vec()
}

/// Best scale and rms residual of `omega` against `t`.
fn scaled_residual(omega: &[f64], t: &[f64]) -> (f64, f64) {
    let tt: f64 = t.iter().map(|x| x * x).sum();
    let s = omega.iter().zip(t).map(|(w, x)| w * x).sum::<f64>() / tt;
    let ss: f64 = omega.iter().zip(t).map(|(w, x)| (w - s * x).powi(2)).sum();
    (s, (ss / omega.len() as f64).sqrt())
}

/// Fits ω_n to the dispersion of J₀/|i−j|^α on an open chain of the same
/// length, with modes matched by node count.
///
/// `dispersion` holds (k_n, ω_n) pairs; they are ordered by k before
/// matching. J₀ is solved in closed form for every trial α, and α is found
/// by a grid scan over [`ALPHA_RANGE`] refined by golden-section search.
pub fn fit_alpha_dispersion(dispersion: &[(f64, f64)], n_ions: usize) -> Result<AlphaFit> {
    if n_ions < 4 || dispersion.len() != n_ions {
        return Err(Error::param("dispersion", format!("need N ≥ 4 points matching n_ions = {n_ions}, got {}", dispersion.len())));
    }
    if dispersion.iter().any(|(k, w)| !k.is_finite() || !w.is_finite()) {
        return Err(Error::param("dispersion", "non-finite entry"));
    }
    let mut sorted = dispersion.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Normalising first makes the argmin exactly invariant under rescaling.
    let norm = sorted.iter().fold(0.0_f64, |m, p| m.max(p.1.abs()));
    if norm == 0.0 {
        return Err(Error::Fit("dispersion is identically zero".into()));
    }
    let omega: Vec<f64> = sorted.iter().map(|p| p.1 / norm).collect();
    let objective = |alpha: f64| scaled_residual(&omega, &template(n_ions, alpha)).1;

    let (lo, hi) = ALPHA_RANGE;
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| objective(lo + i as f64 * step)).collect();
    let best = (0..GRID_POINTS).min_by(|&a, &b| grid[a].total_cmp(&grid[b])).expect("grid is non-empty");
    let spread = grid.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)) - grid[best];

    let mut a = lo + best.saturating_sub(1) as f64 * step;
    let mut b = lo + (best + 1).min(GRID_POINTS - 1) as f64 * step;
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    let mut iterations = 0;
    while b - a > ALPHA_TOLERANCE {
        iterations += 1;
        if iterations > 200 {
            return Err(Error::NoConvergence { iterations, residual: b - a });
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = objective(d);
        }
    }
    let mut alpha = 0.5 * (a + b);
    // The bracket cannot reach the interval ends exactly; snap when it touches them.
    let edge = lo + ALPHA_TOLERANCE;
    if alpha < edge && objective(lo) <= objective(alpha) {
        alpha = lo;
    } else if alpha > hi - ALPHA_TOLERANCE && objective(hi) <= objective(alpha) {
        alpha = hi;
    }
    let (s, r) = scaled_residual(&omega, &template(n_ions, alpha));

    let mut flags = Vec::new();
    if spread < 1e-12 {
        flags.push(FitFlag::FlatObjective);
    }
    if alpha <= lo + ALPHA_TOLERANCE {
        flags.push(FitFlag::LowerBound);
    }
    if alpha >= hi - ALPHA_TOLERANCE {
        flags.push(FitFlag::UpperBound);
    }
    if alpha >= 3.0 {
        flags.push(FitFlag::ShortRange);
    }
    Ok(AlphaFit { alpha, scale: s * norm, residual: r * norm, method: FitMethod::Dispersion, alpha_stderr: None, flags })
}

/// Log-log least squares of J_ij against |i − j| over all pairs i < j.
///
/// Cruder than the dispersion fit for trap-generated couplings, which are
/// not pure power laws. Pairs with J_ij ≤ 0 are dropped and counted in the
/// flags.
pub fn fit_alpha_realspace(j: &CouplingMatrix) -> Result<AlphaFit> {
    let n = j.n();
    if n < 3 {
        return Err(Error::param("couplings", "need N ≥ 3 for a real-space fit"));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = 0;
    for a in 0..n {
        for b in a + 1..n {
            let v = j.get(a, b);
            if v > 0.0 {
                xs.push(((b - a) as f64).ln());
                ys.push(v.ln());
            } else {
                excluded += 1;
            }
        }
    }
    let m = xs.len();
    if m < 3 || xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::Fit(format!("only {m} usable pairs spanning too few distances")));
    }
    let mx = xs.iter().sum::<f64>() / m as f64;
    let my = ys.iter().sum::<f64>() / m as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = if m > 2 { (ssr / (m - 2) as f64 / sxx).sqrt() } else { f64::NAN };
    let mut flags = Vec::new();
    if excluded > 0 {
        flags.push(FitFlag::ExcludedPairs(excluded));
    }
    Ok(AlphaFit {
        alpha: -slope,
        scale: intercept.exp(),
        residual: (ssr / m as f64).sqrt(),
        method: FitMethod::Realspace,
        alpha_stderr: Some(stderr),
        flags,
    })
}
