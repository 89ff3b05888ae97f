//! Error type shared across the crate.

use crate::algebra::Basis;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("`{name}` must be {requirement} (got {value})")]
    InvalidParam {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("basis mismatch: expected a {expected:?}-basis state, got {found:?}")]
    BasisMismatch { expected: Basis, found: Basis },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("measurement outcome has vanishing probability density ({pdf:.3e}); state update undefined")]
    ZeroProbability { pdf: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "dt = {dt} is outside the integrator's stability region for this window \
         (peak |h\u{b7}\u{3bb}| = {stiffness:.2} > {limit}); use dt <= {suggested:.3e}"
    )]
    UnstableStep {
        dt: f64,
        stiffness: f64,
        limit: f64,
        suggested: f64,
    },

    #[error(
        "window too short for the measurement strength: the freeze scale \u{3bb}\u{303}/z = \
         {freeze_time:.1} exceeds t_end/2 = {half_window:.1}; populations may not have \
         converged by t_end (extend the window or reduce \u{3bb}\u{303})"
    )]
    WindowTooShort { freeze_time: f64, half_window: f64 },

    #[error(
        "integration aborted at t = {t:.4}: minimum eigenvalue {min_eigenvalue:.3e} fell below \
         -1e-6; the step size dt = {dt} is too large for these parameters"
    )]
    PositivityLoss {
        t: f64,
        min_eigenvalue: f64,
        dt: f64,
    },

    #[error("trajectory is empty or does not cover the requested window")]
    EmptyTrajectory,

    #[error("decay-rate fit: {0}")]
    DecayFit(String),

    #[error("malformed csv at line {line}: {reason}")]
    MalformedCsv { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
