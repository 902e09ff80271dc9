use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::units::{ELEMENTARY_CHARGE, VACUUM_PERMITTIVITY};

const MAX_ITERATIONS: usize = 200;
const FORCE_TOLERANCE: f64 = 1e-13;

/// Net dimensionless force on each ion: trap restoring force plus Coulomb
/// repulsion. Zero at equilibrium.
fn forces(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let mut f = -u[i];
            for j in 0..n {
                if j != i {
                    let d = u[i] - u[j];
                    f += d.signum() / (d * d);
                }
            }
            f
        })
        .collect()
}

/// Largest absolute residual of the force-balance equations at `u`.
pub fn force_residual(u: &[f64]) -> f64 {
    forces(u).iter().fold(0.0_f64, |m, f| m.max(f.abs()))
}

/// Characteristic length (e²/4πε₀mω_ax²)^{1/3} in meters; multiplies the
/// dimensionless positions.
pub fn length_scale(ion_mass: f64, axial_freq_hz: f64) -> f64 {
    let w = crate::units::hz_to_rad(axial_freq_hz);
    let k = ELEMENTARY_CHARGE.powi(2) / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY);
    (k / (ion_mass * w * w)).cbrt()
}

/// Dimensionless equilibrium positions of `n` ions in a harmonic trap,
/// sorted ascending, from damped Newton iteration on the force balance.
pub fn equilibrium_positions(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::param("n_ions", format!("need at least 2 ions, got {n}")));
    }
    // Near-uniform start using the central-spacing scaling 2.018 N^-0.559.
    let spacing = 2.018 / (n as f64).powf(0.559);
    let mid = (n as f64 - 1.0) / 2.0;
    let mut u: Vec<f64> = (0..n).map(|i| (i as f64 - mid) * spacing).collect();

    let mut residual = force_residual(&u);
    for _ in 0..MAX_ITERATIONS {
        if residual < FORCE_TOLERANCE {
            break;
        }
        let f = DVector::from_vec(forces(&u));
        // Jacobian of the force is minus the Hessian of the potential.
        let mut hess = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let mut diag = 1.0;
            for j in 0..n {
                if j != i {
                    let c = 2.0 / (u[i] - u[j]).abs().powi(3);
                    diag += c;
                    hess[(i, j)] = -c;
                }
            }
            hess[(i, i)] = diag;
        }
        let step = match hess.cholesky() {
            Some(ch) => ch.solve(&f),
            None => f.clone(),
        };
        let mut damping = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, s)| a + damping * s).collect();
            let ordered = trial.windows(2).all(|w| w[0] < w[1]);
            if ordered {
                let r = force_residual(&trial);
                if r < residual || damping < 1e-6 {
                    u = trial;
                    residual = r;
                    break;
                }
            }
            damping *= 0.5;
            if damping < 1e-12 {
                return Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual });
            }
        }
    }
    if residual >= FORCE_TOLERANCE {
        return Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual });
    }
    // The solution is mirror-symmetric; average out rounding asymmetry.
    let sym: Vec<f64> = (0..n).map(|i| 0.5 * (u[i] - u[n - 1 - i])).collect();
    if force_residual(&sym) <= residual {
        u = sym;
    }
    Ok(u)
}
