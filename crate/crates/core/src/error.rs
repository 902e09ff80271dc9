use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("equilibrium solve did not converge after {iterations} iterations (max force residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("ion chain unstable: {branch} branch eigenvalue {eigenvalue:.6e} < 0 (zig-zag transition)")]
    UnstableChain { branch: &'static str, eigenvalue: f64 },

    #[error("detuning {detuning_hz:.3} Hz lies within {gap_hz:.3} Hz of mode {mode} at {mode_hz:.3} Hz")]
    Resonance { detuning_hz: f64, mode_hz: f64, mode: usize, gap_hz: f64 },

    #[error("{n} spins exceed the configured maximum of {max}")]
    TooManySpins { n: usize, max: usize },

    #[error("Krylov propagator missed tolerance {tolerance:.1e} (estimate {estimate:.3e}) within {iterations} substeps")]
    PropagatorTolerance { tolerance: f64, estimate: f64, iterations: usize },

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("tomography: {0}")]
    Tomography(String),

    #[error("series truncation: remainder estimate {remainder:.3e} exceeds requested relative error {requested:.1e} at m_max = {m_max}")]
    Truncation { remainder: f64, requested: f64, m_max: u64 },

    #[error("Bessel argument {0} overflows f64; use the exponentially scaled form")]
    Overflow(f64),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
