//! Lieb–Robinson bounds for nearest-neighbour chains.
//!
//! Two routes to the same function F(d, t) = 2 I_d(4g|t|): an explicit sum
//! over lattice paths weighted by (2g|t|)^m/m!, and the modified Bessel
//! function evaluated from its own power series. ħ = 1, g in rad/s.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ionchain::CouplingMatrix;
use crate::magnon::diagonalize_magnons;

/// Number of length-`m` nearest-neighbour walks ending a distance `d` away:
/// C(m, (m−d)/2) when m and d share parity, else zero.
pub fn path_count(m: u64, d: u64) -> BigUint {
    if d > m || (m - d) % 2 == 1 {
        return BigUint::zero();
    }
    let k = (m - d) / 2;
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc *= m - k + i;
        acc /= i;
    }
    acc
}

fn big_ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().map_or(f64::INFINITY, f64::ln);
    }
    let shift = bits - 900;
    (x >> shift).to_f64().expect("900-bit value fits in f64").ln() + shift as f64 * std::f64::consts::LN_2
}

/// Truncated path sum with an estimate of the neglected tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesBound {
    pub value: f64,
    /// Geometric bound on Σ_{m > m_max} of the omitted terms.
    pub remainder: f64,
    pub m_max: u64,
}

/// F(d, t) = 2 Σ_{m=d}^{m_max} 𝒩(m) (2g|t|)^m / m!.
///
/// The leading factor 2 is the same overall prefactor as in the closed form
/// 2 I_d(4g|t|); the bare path sum equals I_d(4g|t|). Fails when the tail
/// estimate exceeds `rel_tol` times the value.
pub fn lr_bound_series(d: u64, t: f64, g: f64, m_max: u64, rel_tol: f64) -> Result<SeriesBound> {
    if m_max < d {
        return Err(Error::param("m_max", format!("m_max = {m_max} must be at least d = {d}")));
    }
    if !(g >= 0.0 && g.is_finite() && t.is_finite()) {
        return Err(Error::param("g", "g must be finite and non-negative, t finite"));
    }
    let y = 2.0 * g * t.abs();
    let ln_y = y.ln();
    let mut ln_fact = 0.0;
    let mut value = 0.0;
    let mut last_m = None;
    for m in 0..=m_max {
        if m > 0 {
            ln_fact += (m as f64).ln();
        }
        if m < d || (m - d) % 2 == 1 {
            continue;
        }
        let term = if m == 0 {
            path_count(0, d).to_f64().unwrap_or(0.0)
        } else if y == 0.0 {
            0.0
        } else {
            (big_ln(&path_count(m, d)) + m as f64 * ln_y - ln_fact).exp()
        };
        value += 2.0 * term;
        last_m = Some((m, 2.0 * term));
    }
    let remainder = match last_m {
        Some((m, term)) if term > 0.0 => {
            let s = ((m - d) / 2) as f64;
            let ratio = |s: f64| y * y / ((s + 1.0) * (s + d as f64 + 1.0));
            let next = term * ratio(s);
            let r = ratio(s + 1.0);
            if r < 1.0 {
                next / (1.0 - r)
            } else {
                f64::INFINITY
            }
        }
        _ => 0.0,
    };
    if remainder > rel_tol * value {
        return Err(Error::Truncation { remainder: remainder / value.max(f64::MIN_POSITIVE), requested: rel_tol, m_max });
    }
    Ok(SeriesBound { value, remainder, m_max })
}

/// Largest argument evaluated by direct power series.
const SERIES_MAX_ARGUMENT: f64 = 600.0;

fn bessel_i_series(d: u64, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=d {
        term *= half / k as f64;
    }
    if term == 0.0 {
        return 0.0;
    }
    let q = half * half;
    let mut sum = term;
    let mut s = 0.0;
    loop {
        s += 1.0;
        term *= q / (s * (s + d as f64));
        sum += term;
        if term <= 1e-16 * sum {
            return sum;
        }
    }
}

/// e^{−x} I_d(x) from the large-argument expansion.
fn bessel_i_scaled_asymptotic(d: u64, x: f64) -> f64 {
    let mu = 4.0 * (d as f64).powi(2);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// Modified Bessel function of the first kind, I_d(x), for x ≥ 0.
pub fn bessel_i(d: u64, x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_MAX_ARGUMENT {
        bessel_i_series(d, x)
    } else {
        bessel_i_scaled_asymptotic(d, x) * x.exp()
    }
}

/// Exponentially scaled e^{−x} I_d(x); finite for every x ≥ 0.
pub fn bessel_i_scaled(d: u64, x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_MAX_ARGUMENT {
        bessel_i_series(d, x) * (-x).exp()
    } else {
        bessel_i_scaled_asymptotic(d, x)
    }
}

/// F(d, t) = 2 I_d(4g|t|).
///
/// Beyond x ≈ 700 the result overflows; use [`bessel_i_scaled`] there.
pub fn lr_bound_bessel(d: u64, t: f64, g: f64) -> Result<f64> {
    let x = 4.0 * g * t.abs();
    let v = 2.0 * bessel_i(d, x);
    if !v.is_finite() {
        return Err(Error::Overflow(x));
    }
    Ok(v)
}

/// Nearest-neighbour light cone of a coupling matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightConeParams {
    /// Bond norm max_i |J_{i,i+1}|, rad/s.
    pub g: f64,
    /// Cone velocity: maximal group velocity of the uniform chain with J̄, sites/s.
    pub v: f64,
    /// Exponential-envelope constants; display parameters only.
    pub mu: f64,
    pub c: f64,
    /// Mean nearest-neighbour coupling, rad/s.
    pub jbar: f64,
}

impl LightConeParams {
    pub fn with_envelope(self, mu: f64, c: f64) -> Self {
        Self { mu, c, ..self }
    }

    /// Arrival time t = d / v of the cone at distance `d`.
    pub fn cone_time(&self, d: f64) -> f64 {
        d / self.v
    }

    /// C e^{μ(v|t| − d)}.
    pub fn envelope(&self, d: f64, t: f64) -> f64 {
        self.c * (self.mu * (self.v * t.abs() - d)).exp()
    }

    pub fn bessel_bound(&self, d: u64, t: f64) -> Result<f64> {
        lr_bound_bessel(d, t, self.g)
    }
}

pub fn nn_lightcone(j: &CouplingMatrix) -> Result<LightConeParams> {
    let n = j.n();
    let jbar = j.mean_nearest_neighbour();
    let g = (0..n - 1).map(|i| j.get(i, i + 1).abs()).fold(0.0, f64::max);
    let v = diagonalize_magnons(&CouplingMatrix::nearest_neighbour(n, jbar)?).max_group_velocity();
    Ok(LightConeParams { g, v, mu: 1.0, c: 1.0, jbar })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_count_examples() {
        assert_eq!(path_count(1, 1), BigUint::from(1u32));
        assert_eq!(path_count(2, 1), BigUint::zero());
        assert_eq!(path_count(5, 1), BigUint::from(10u32));
        assert_eq!(path_count(0, 0), BigUint::one());
        assert_eq!(path_count(3, 5), BigUint::zero());
    }

    #[test]
    fn path_count_matches_walk_enumeration() {
        // Brute force: count ±1 step sequences of length m ending at +d.
        for m in 0..=16u64 {
            for d in 0..=m {
                let count = (0u32..1 << m).filter(|w| 2 * w.count_ones() as i64 - m as i64 == d as i64).count();
                assert_eq!(path_count(m, d), BigUint::from(count), "m={m} d={d}");
            }
        }
    }

    #[test]
    fn path_count_beyond_u64() {
        let c = path_count(120, 0);
        assert!(c.bits() > 64);
        // C(120, 60) = 9.66e34
        assert!((c.to_f64().unwrap() / 9.66e34 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn bessel_known_values() {
        // Tabulated values of I_0(1), I_1(1), I_3(1), I_0(10).
        assert!((bessel_i(0, 1.0) - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert!((bessel_i(1, 1.0) - 0.565_159_103_992_485).abs() < 1e-15);
        assert!((bessel_i(3, 1.0) - 0.022_168_424_924_331_9).abs() < 1e-16);
        assert!((bessel_i(0, 10.0) / 2_815.716_628_466_254 - 1.0).abs() < 1e-14);
        assert_eq!(bessel_i(2, 0.0), 0.0);
        assert_eq!(bessel_i(0, 0.0), 1.0);
    }

    #[test]
    fn bessel_regime_switch_is_continuous() {
        for d in [0u64, 3, 10] {
            let a = bessel_i_series(d, SERIES_MAX_ARGUMENT) * (-SERIES_MAX_ARGUMENT).exp();
            let b = bessel_i_scaled_asymptotic(d, SERIES_MAX_ARGUMENT);
            assert!((a / b - 1.0).abs() < 1e-12, "d={d}: {a} vs {b}");
        }
        assert!(matches!(lr_bound_bessel(0, 1.0, 500.0), Err(Error::Overflow(_))));
        assert!(bessel_i_scaled(0, 2000.0).is_finite());
    }

    #[test]
    fn zero_time() {
        assert_eq!(lr_bound_bessel(0, 0.0, 1.0).unwrap(), 2.0);
        assert_eq!(lr_bound_bessel(3, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(lr_bound_series(3, 0.0, 1.0, 40, 1e-12).unwrap().value, 0.0);
        assert_eq!(lr_bound_series(0, 0.0, 1.0, 40, 1e-12).unwrap().value, 2.0);
    }

    #[test]
    fn series_matches_closed_form() {
        // 4g|t| = 1 → 2 I_3(1).
        let s = lr_bound_series(3, 0.25, 1.0, 60, 1e-14).unwrap();
        assert!((s.value - 2.0 * 0.022_168_424_924_331_9).abs() < 1e-10);
        for d in 0..=10u64 {
            for k in 0..=16 {
                let x = k as f64 * 0.5;
                let t = x / 4.0;
                let a = lr_bound_series(d, t, 1.0, 80, 1e-14).unwrap().value;
                let b = lr_bound_bessel(d, t, 1.0).unwrap();
                assert!((a - b).abs() <= 1e-10 * b.max(f64::MIN_POSITIVE), "d={d} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn truncation_is_reported() {
        assert!(matches!(lr_bound_series(0, 10.0, 1.0, 10, 1e-12), Err(Error::Truncation { .. })));
        assert!(lr_bound_series(4, 1.0, 1.0, 3, 1e-12).is_err());
    }

    #[test]
    fn monotone_in_time_and_distance() {
        for d in 0..8u64 {
            let mut last = 0.0;
            for k in 0..50 {
                let f = lr_bound_bessel(d, k as f64 * 0.1, 1.0).unwrap();
                assert!(f >= last);
                last = f;
            }
        }
        for k in 1..30 {
            let t = k as f64 * 0.2;
            for d in 0..10u64 {
                assert!(lr_bound_bessel(d + 1, t, 1.0).unwrap() <= lr_bound_bessel(d, t, 1.0).unwrap());
            }
        }
    }

    #[test]
    fn uniform_chain_light_cone() {
        let j = CouplingMatrix::nearest_neighbour(9, 2.5).unwrap();
        let p = nn_lightcone(&j).unwrap();
        assert!((p.jbar - 2.5).abs() < 1e-15);
        assert!((p.g - 2.5).abs() < 1e-15);
        let direct = diagonalize_magnons(&j).max_group_velocity();
        assert!((p.v - direct).abs() < 1e-12 * direct);
        assert!((p.cone_time(3.0) - 3.0 / p.v).abs() < 1e-15);
        let p = p.with_envelope(2.0, 0.5);
        assert!((p.envelope(1.0, 1.0 / p.v) - 0.5).abs() < 1e-12);
    }
}
