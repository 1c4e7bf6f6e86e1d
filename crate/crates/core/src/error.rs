// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("particle count N must be even, got N = {0}")]
    OddParticleCount(usize),

    #[error("particle count N must be at least 4, got N = {0}")]
    TooFewParticles(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The square-root argument of the inverse-engineered control went
    /// non-positive; the requested duration is below the minimum time.
    #[error("control is not real at t = {t:.6e} (margin {margin:.3e}); tau is below tau_min")]
    NonRealControl { t: f64, margin: f64 },

    #[error("energy gap {gap:.3e} is degenerate")]
    DegenerateGap { gap: f64 },

    #[error("integrator step underflow at t = {t:.6e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integrator exceeded {max_steps} steps at t = {t:.6e}")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("observable at index {index} is {value:e}; log-log fit needs positive values")]
    NonPositiveObservable { index: usize, value: f64 },

    #[error("scaling fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error(
        "BdG spectrum has a near-zero eigenvalue ({gap:.3e}); positive/negative split is ambiguous"
    )]
    DegenerateBdG { gap: f64 },

    #[error("BdG isometry drift {drift:.3e} exceeds tolerance")]
    IsometryDrift { drift: f64 },

    #[error("defect density has imaginary residue {imag:.3e}")]
    ImaginaryResidue { imag: f64 },

    #[error(
        "eigensolver did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("mode {mode}: {source}")]
    ModeFailed { mode: usize, source: Box<Error> },

    #[error("disorder realization {index}: {source}")]
    RealizationFailed { index: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
