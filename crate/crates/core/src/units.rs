//! Physical constants and unit conversions.
//!
//! Configuration values are given in Hz (cycles per second). Everything past
//! the configuration boundary works in angular frequency (rad/s) with ħ = 1.

use std::f64::consts::PI;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Mass of a ⁴⁰Ca⁺ ion, kg.
pub const CA40_MASS: f64 = 39.962_590_86 * AMU;

#[inline]
pub fn hz_to_rad(f: f64) -> f64 {
    2.0 * PI * f
}

#[inline]
pub fn rad_to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}
