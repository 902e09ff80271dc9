use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian fit a + b·exp(−(t−t0)²/2w²) to the first magnetisation maximum
/// at one site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalFit {
    pub site: usize,
    pub t0: f64,
    pub width: f64,
    pub amplitude: f64,
    pub baseline: f64,
    /// rms residual over the fitted samples.
    pub goodness: f64,
    pub t0_stderr: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontFit {
    /// Sites per second.
    pub velocity: f64,
    pub velocity_stderr: f64,
    /// Seconds.
    pub intercept: f64,
    pub intercept_stderr: f64,
    /// Distances from the quench site entering the fit.
    pub sites_used: Vec<usize>,
}

/// Minimum height of the first maximum above the pre-arrival baseline, as a
/// fraction of the largest excursion in the window. Only matters for
/// noiseless input, where the pre-arrival spread can vanish and round-off
/// ripples would otherwise qualify.
const PEAK_FLOOR: f64 = 1e-3;
/// The pre-arrival segment ends where the signal first exceeds this fraction
/// of the largest excursion.
const ONSET_FRACTION: f64 = 0.1;

fn model(p: &Vector4<f64>, t: f64) -> (f64, Vector4<f64>) {
    let (b, t0, w) = (p[1], p[2], p[3]);
    let u = (t - t0) / w;
    let g = (-0.5 * u * u).exp();
    (p[0] + b * g, Vector4::new(1.0, g, b * g * u / w, b * g * u * u / w))
}

fn normal_equations(p: &Vector4<f64>, t: &[f64], y: &[f64]) -> (Matrix4<f64>, Vector4<f64>, f64) {
    let mut jtj = Matrix4::zeros();
    let mut jtr = Vector4::zeros();
    let mut ssr = 0.0;
    for (&ti, &yi) in t.iter().zip(y) {
        let (f, grad) = model(p, ti);
        let r = yi - f;
        jtj += grad * grad.transpose();
        jtr += grad * r;
        ssr += r * r;
    }
    (jtj, jtr, ssr)
}

fn cost(p: &Vector4<f64>, t: &[f64], y: &[f64]) -> f64 {
    t.iter().zip(y).map(|(&ti, &yi)| (yi - model(p, ti).0).powi(2)).sum()
}

/// Levenberg–Marquardt on (a, b, t0, w); returns parameters and the
/// unscaled covariance (JᵀJ)⁻¹.
fn levenberg_marquardt(mut p: Vector4<f64>, t: &[f64], y: &[f64]) -> Result<(Vector4<f64>, Matrix4<f64>, f64)> {
    let mut lambda = 1e-3;
    let mut current = cost(&p, t, y);
    for iteration in 0..500 {
        let (jtj, jtr, _) = normal_equations(&p, t, y);
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj;
            for k in 0..4 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let c = cost(&trial, t, y);
            if c.is_finite() && trial[3] != 0.0 && c <= current {
                let converged = step.iter().zip(trial.iter()).all(|(s, v)| s.abs() <= 1e-13 * v.abs().max(1e-12)) || current - c <= 1e-30 * current.max(1e-300);
                p = trial;
                current = c;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                if converged {
                    let (jtj, _, ssr) = normal_equations(&p, t, y);
                    let cov = jtj.try_inverse().unwrap_or_else(|| Matrix4::from_element(f64::NAN));
                    return Ok((p, cov, ssr));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No downhill step at any damping: already at the minimum.
            let (jtj, _, ssr) = normal_equations(&p, t, y);
            let cov = jtj.try_inverse().unwrap_or_else(|| Matrix4::from_element(f64::NAN));
            return Ok((p, cov, ssr));
        }
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::Fit(format!("Gaussian fit diverged after {iteration} iterations")));
        }
    }
    Err(Error::NoConvergence { iterations: 500, residual: current })
}

/// Fits the first arrival of a wave packet at `site`.
///
/// Only samples with `window.0 ≤ t ≤ window.1` are used. The pre-arrival
/// baseline is the mean of the leading samples, up to the point where the
/// signal first rises by a tenth of its largest excursion. The first
/// maximum is the earliest interior local maximum exceeding the baseline by
/// three pre-arrival standard deviations; later maxima come from
/// reflections. The Gaussian is fitted
/// from the window start to the first local minimum after that peak, with
/// initial width a sixth of that span.
pub fn fit_gaussian_arrival(site: usize, times: &[f64], values: &[f64], window: (f64, f64)) -> Result<ArrivalFit> {
    if times.len() != values.len() {
        return Err(Error::param("series", "times and values differ in length"));
    }
    if !(window.1 > window.0) {
        return Err(Error::param("window", "window end must exceed its start"));
    }
    let (t, y): (Vec<f64>, Vec<f64>) =
        times.iter().zip(values).filter(|(&ti, _)| ti >= window.0 && ti <= window.1).map(|(&a, &b)| (a, b)).unzip();
    if t.len() < 5 {
        return Err(Error::param("window", format!("{} samples in window, need at least 5", t.len())));
    }
    let first = y[0];
    let peak = y.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let onset = y.iter().position(|&v| v > first + ONSET_FRACTION * (peak - first)).unwrap_or(y.len()).max(1);
    let pre = &y[..onset];
    let baseline = pre.iter().sum::<f64>() / pre.len() as f64;
    let sigma = (pre.iter().map(|v| (v - baseline).powi(2)).sum::<f64>() / pre.len() as f64).sqrt();
    let threshold = baseline + (3.0 * sigma).max(PEAK_FLOOR * (peak - baseline));

    let top = (1..y.len() - 1)
        .find(|&i| y[i] >= y[i - 1] && y[i] > y[i + 1] && y[i] > threshold)
        .ok_or_else(|| Error::Fit(format!("no interior maximum above baseline at site {}", site + 1)))?;
    let end = (top + 1..y.len() - 1).find(|&i| y[i] <= y[i - 1] && y[i] < y[i + 1]).unwrap_or(y.len() - 1);
    let (t, y) = (&t[..=end], &y[..=end]);
    if t.len() < 5 {
        return Err(Error::Fit(format!("only {} samples around the first maximum", t.len())));
    }

    // Work in window-scaled time so all parameters are O(1).
    let span = window.1 - window.0;
    let tau: Vec<f64> = t.iter().map(|ti| (ti - window.0) / span).collect();
    let guess = Vector4::new(baseline, y[top] - baseline, tau[top], (tau[end] - tau[0]) / 6.0);
    let (p, cov, ssr) = levenberg_marquardt(guess, &tau, y)?;
    let t0 = window.0 + p[2] * span;
    let width = p[3].abs() * span;
    if !(t0 >= window.0 && t0 <= window.1) || !width.is_finite() || width == 0.0 {
        return Err(Error::Fit(format!("Gaussian fit at site {} left the window (t0 = {t0:e})", site + 1)));
    }
    let dof = t.len().saturating_sub(4).max(1);
    Ok(ArrivalFit {
        site,
        t0,
        width,
        amplitude: p[1],
        baseline: p[0],
        goodness: (ssr / t.len() as f64).sqrt(),
        t0_stderr: (cov[(2, 2)] * ssr / dof as f64).sqrt() * span,
        samples: t.len(),
    })
}

/// Ordinary least squares t0 = d / v + intercept.
pub fn fit_front_velocity(arrivals: &[(usize, f64)]) -> Result<FrontFit> {
    let m = arrivals.len();
    if m < 3 {
        return Err(Error::param("arrivals", format!("need at least 3 arrival times, got {m}")));
    }
    let mx = arrivals.iter().map(|a| a.0 as f64).sum::<f64>() / m as f64;
    let my = arrivals.iter().map(|a| a.1).sum::<f64>() / m as f64;
    let sxx: f64 = arrivals.iter().map(|a| (a.0 as f64 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all arrivals at the same distance".into()));
    }
    let sxy: f64 = arrivals.iter().map(|a| (a.0 as f64 - mx) * (a.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let velocity = 1.0 / slope;
    if !velocity.is_finite() {
        return Err(Error::Fit("arrival times do not depend on distance".into()));
    }
    let ssr: f64 = arrivals.iter().map(|a| (a.1 - intercept - slope * a.0 as f64).powi(2)).sum();
    let s2 = if m > 2 { ssr / (m - 2) as f64 } else { 0.0 };
    let slope_se = (s2 / sxx).sqrt();
    let sum_x2: f64 = arrivals.iter().map(|a| (a.0 as f64).powi(2)).sum();
    Ok(FrontFit {
        velocity,
        velocity_stderr: slope_se / (slope * slope),
        intercept,
        intercept_stderr: (s2 * sum_x2 / (m as f64 * sxx)).sqrt(),
        sites_used: arrivals.iter().map(|a| a.0).collect(),
    })
}

/// Sites on the longer side of `source`, nearest first, without the chain
/// end (finite-size reflections distort its arrival).
pub fn arrival_sites(n: usize, source: usize) -> Vec<usize> {
    if source > (n - source).saturating_sub(1) {
        (1..source).rev().collect()
    } else {
        (source + 1..n - 1).collect()
    }
}

/// Arrival fits at [`arrival_sites`] and the front velocity through them.
///
/// `magnetisation[t][i]` is ⟨σ_i^z⟩ at `times[t]`.
pub fn front_from_magnetisation(times: &[f64], magnetisation: &[Vec<f64>], source: usize) -> Result<(Vec<ArrivalFit>, FrontFit)> {
    let n = magnetisation.first().map_or(0, Vec::len);
    if source >= n {
        return Err(Error::param("source", format!("site {} out of range", source + 1)));
    }
    let window = (times[0], times[times.len() - 1]);
    let fits = arrival_sites(n, source)
        .into_iter()
        .map(|site| {
            let series: Vec<f64> = magnetisation.iter().map(|row| row[site]).collect();
            fit_gaussian_arrival(site, times, &series, window)
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(usize, f64)> = fits.iter().map(|f| (f.site.abs_diff(source), f.t0)).collect();
    let front = fit_front_velocity(&points)?;
    Ok((fits, front))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ionchain::CouplingMatrix;
    use crate::magnon::diagonalize_magnons;

    fn gaussian(a: f64, b: f64, t0: f64, w: f64, t: f64) -> f64 {
        a + b * (-(t - t0).powi(2) / (2.0 * w * w)).exp()
    }

    #[test]
    fn recovers_exact_gaussian() {
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 5e-6).collect();
        let (a, b, t0, w) = (-1.0, 0.6, 3.1e-4, 7e-5);
        let ys: Vec<f64> = times.iter().map(|&t| gaussian(a, b, t0, w, t)).collect();
        let fit = fit_gaussian_arrival(2, &times, &ys, (0.0, 1e-3)).unwrap();
        assert!((fit.t0 / t0 - 1.0).abs() < 1e-6);
        assert!((fit.width / w - 1.0).abs() < 1e-6);
        assert!((fit.amplitude / b - 1.0).abs() < 1e-6);
        assert!((fit.baseline / a - 1.0).abs() < 1e-6);
        assert!(fit.goodness < 1e-9);
    }

    #[test]
    fn symmetric_pulse_peaks_at_argmax() {
        let dt = 0.01;
        let times: Vec<f64> = (0..101).map(|i| i as f64 * dt).collect();
        let ys: Vec<f64> = times.iter().map(|&t| 1.0 / (1.0 + ((t - 0.437) / 0.05).powi(2))).collect();
        let fit = fit_gaussian_arrival(0, &times, &ys, (0.0, 1.0)).unwrap();
        let argmax = (0..ys.len()).max_by(|&a, &b| ys[a].total_cmp(&ys[b])).unwrap();
        assert!((fit.t0 - times[argmax]).abs() <= dt);
    }

    #[test]
    fn picks_first_maximum_not_the_largest() {
        let times: Vec<f64> = (0..400).map(|i| i as f64 * 0.01).collect();
        let ys: Vec<f64> = times.iter().map(|&t| gaussian(0.0, 0.5, 1.0, 0.15, t) + gaussian(0.0, 1.0, 3.0, 0.15, t)).collect();
        let fit = fit_gaussian_arrival(0, &times, &ys, (0.0, 4.0)).unwrap();
        assert!((fit.t0 - 1.0).abs() < 1e-3, "{fit:?}");
    }

    #[test]
    fn arrival_errors() {
        let times: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let rising: Vec<f64> = times.clone();
        assert!(matches!(fit_gaussian_arrival(0, &times, &rising, (0.0, 49.0)), Err(Error::Fit(_))));
        assert!(fit_gaussian_arrival(0, &times, &rising, (0.0, 3.0)).is_err());
        assert!(fit_gaussian_arrival(0, &times, &rising[..10], (0.0, 49.0)).is_err());
    }

    #[test]
    fn exact_line_front() {
        let v = 1234.5;
        let pts: Vec<(usize, f64)> = (1..6).map(|d| (d, d as f64 / v + 2e-4)).collect();
        let fit = fit_front_velocity(&pts).unwrap();
        assert!((fit.velocity / v - 1.0).abs() < 1e-10);
        assert!((fit.intercept - 2e-4).abs() < 1e-12);
        assert_eq!(fit.sites_used, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn front_is_translation_invariant() {
        let pts = vec![(1, 0.11), (2, 0.19), (3, 0.32), (4, 0.41)];
        let shifted: Vec<(usize, f64)> = pts.iter().map(|&(d, t)| (d, t + 5.0)).collect();
        let a = fit_front_velocity(&pts).unwrap();
        let b = fit_front_velocity(&shifted).unwrap();
        assert!((a.velocity - b.velocity).abs() < 1e-9 * a.velocity);
        assert!((b.intercept - a.intercept - 5.0).abs() < 1e-12);
    }

    #[test]
    fn front_errors() {
        assert!(fit_front_velocity(&[(1, 0.1), (2, 0.2)]).is_err());
        assert!(fit_front_velocity(&[(2, 0.1), (2, 0.2), (2, 0.3)]).is_err());
        assert!(fit_front_velocity(&[(1, 0.1), (2, 0.1), (3, 0.1)]).is_err());
    }

    #[test]
    fn arrival_site_selection() {
        assert_eq!(arrival_sites(15, 7), vec![8, 9, 10, 11, 12, 13]);
        assert_eq!(arrival_sites(7, 5), vec![4, 3, 2, 1]);
        assert_eq!(arrival_sites(7, 0), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn nn_chain_arrival_matches_group_velocity() {
        let n = 15;
        let j = CouplingMatrix::nearest_neighbour(n, 1.0).unwrap();
        let spec = diagonalize_magnons(&j);
        let v = spec.max_group_velocity();
        let times: Vec<f64> = (0..=600).map(|i| i as f64 * 0.02).collect();
        let mag: Vec<Vec<f64>> = spec.evolve(7, &times).unwrap().iter().map(|s| s.magnetisation()).collect();
        let site = 12;
        let series: Vec<f64> = mag.iter().map(|r| r[site]).collect();
        let fit = fit_gaussian_arrival(site, &times, &series, (0.0, 12.0)).unwrap();
        // Before reflections the amplitude is that of the infinite chain,
        // |a_d|² = J_d(2Jt)², whose first maximum lags d/v by the front's
        // Airy offset.
        let bessel_j5 = |x: f64| (0..40).map(|s| (-1.0_f64).powi(s) * (x / 2.0).powi(5 + 2 * s) / ((1..=s).map(f64::from).product::<f64>() * (1..=5 + s).map(f64::from).product::<f64>())).sum::<f64>();
        let peak = (0..6000).map(|i| i as f64 * 1e-3).max_by(|a, b| bessel_j5(2.0 * a).powi(2).total_cmp(&bessel_j5(2.0 * b).powi(2))).unwrap();
        assert!((fit.t0 / peak - 1.0).abs() < 0.02, "t0 {} vs {}", fit.t0, peak);
        assert!(fit.t0 > 5.0 / v);

        let (_, front) = front_from_magnetisation(&times, &mag, 7).unwrap();
        assert!((front.velocity / v - 1.0).abs() < 0.10, "v {} vs {}", front.velocity, v);
    }
}
