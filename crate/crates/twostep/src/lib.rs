//! Energy-preserving two-step integrators for canonical Hamiltonian
//! systems `y' = J grad H(y)`.
//!
//! The centerpiece is a fourth-order two-step method that conserves the
//! energy of polynomial Hamiltonians exactly (and of general ones to
//! machine precision) by discretizing the line integral of `grad H` along
//! a quadratic interpolant and cancelling it with an `O(h^5)` correction.
//! Around it the crate provides:
//!
//! - sparse polynomial Hamiltonians with exact gradients and
//!   callback-defined systems ([`hamiltonian`]),
//! - Lobatto / Gauss / uniform quadrature rules on [0, 1] with verified
//!   degrees of precision ([`quadrature`]),
//! - the interpolating curve and its weighted-average evaluation
//!   ([`interpolant`]),
//! - the corrected and linear two-step methods, the fourth-order HBVM
//!   starter, a stage-trapezoidal baseline and a roundoff drift
//!   correction ([`integrator`], [`trajectory`]),
//! - built-in test problems ([`problems`]) and experiment drivers with
//!   CSV output ([`harness`]).
//!
//! # Quick start
//!
//! ```
//! use twostep::{integrate, MethodConfig, MethodKind, QuadratureRule, Starter};
//!
//! let problem = twostep::problems::cubic_pendulum();
//! let cfg = MethodConfig::new(
//!     MethodKind::TwoStepCorrected,
//!     QuadratureRule::lobatto(5)?,
//! );
//! let traj = integrate(
//!     problem.hamiltonian.as_ref(),
//!     &cfg,
//!     &problem.y0,
//!     0.25,
//!     40,
//!     Starter::Hbvm4,
//! )?;
//! assert!(traj.max_energy_error() < 1e-13);
//! # Ok::<(), twostep::Error>(())
//! ```

pub mod error;
pub mod hamiltonian;
pub mod harness;
pub mod integrator;
pub mod interpolant;
pub mod problems;
pub mod quadrature;
pub mod state;
pub mod trajectory;

pub use error::{Error, Result};
pub use hamiltonian::{CallbackHamiltonian, Hamiltonian, PolynomialHamiltonian, Term};
pub use integrator::{MethodConfig, MethodKind, Predictor, StepInfo};
pub use interpolant::QuadraticCurve;
pub use quadrature::{required_nodes, NodeFamily, QuadratureRule};
pub use state::{apply_j, StateVector};
pub use trajectory::{integrate, Starter, StepRecord, Trajectory};

// The book chapters double as doc-tests so their code snippets are
// compiled and run by `cargo test --doc`.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(hamiltonians, "../../../book/src/hamiltonians.md");
    chapter!(quadrature, "../../../book/src/quadrature.md");
    chapter!(two_step_methods, "../../../book/src/two-step-methods.md");
    chapter!(experiments, "../../../book/src/experiments.md");
}
