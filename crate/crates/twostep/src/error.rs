//! Error type shared across the crate.

use crate::quadrature::NodeFamily;

/// Errors produced by construction, quadrature generation and the
/// nonlinear solvers.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A state vector had odd length or was empty.
    #[error("phase-space vector must have even length 2m with m >= 1, got {0}")]
    OddDimension(usize),

    /// A state vector contained a NaN or infinite entry.
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    /// Two objects that must share a phase-space dimension do not.
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Requested a rule outside the supported (family, k) range.
    #[error("unsupported quadrature rule: {family} with {k} nodes")]
    UnsupportedRule { family: NodeFamily, k: usize },

    /// The Hamiltonian carries no polynomial degree, so the minimal node
    /// count cannot be derived; the caller must pick k explicitly.
    #[error("Hamiltonian is not polynomial; choose the node count explicitly")]
    NonPolynomial,

    /// Fixed-point iteration hit the sweep cap or blew up, which signals
    /// a stepsize too large for the contraction to hold.
    #[error("fixed-point iteration diverged after {iterations} sweeps (h likely too large)")]
    FixedPointDivergence { iterations: usize },

    /// The averaged gradient (or the gradient itself) fell below the
    /// configured norm floor, so a division by its norm is unsafe.
    #[error("gradient norm {norm:.3e} below floor {floor:.3e}; correction skipped")]
    DegenerateGradient { norm: f64, floor: f64 },

    /// Kepler eccentricity outside [0, 1).
    #[error("eccentricity must lie in [0, 1), got {0}")]
    InvalidEccentricity(f64),

    /// A run length that is not an integer number of steps.
    #[error("t_end = {t_end} is not an integer multiple of h = {h}")]
    NonIntegralSteps { t_end: f64, h: f64 },

    /// Failure attributed to a specific step of a trajectory.
    #[error("step {index}: {source}")]
    AtStep {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    /// Malformed textual input (CSV, h-lists, config specs).
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Attach the index of the trajectory step that failed.
    pub fn at_step(self, index: usize) -> Error {
        Error::AtStep {
            index,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
