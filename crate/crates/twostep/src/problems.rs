//! Built-in test problems.
//!
//! Each problem bundles a Hamiltonian, its initial state and run defaults.
//! The CLI addresses them by the short names `pendulum3`, `fhp6`, `kepler`
//! and `sho`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hamiltonian::{CallbackHamiltonian, Hamiltonian, PolynomialHamiltonian, Term};
use crate::state::StateVector;

/// Reference solution callback, `t -> y(t)` from the problem's `y0`.
pub type ReferenceFn = dyn Fn(f64) -> StateVector + Send + Sync;

/// A named Hamiltonian problem with initial data.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub hamiltonian: Arc<dyn Hamiltonian>,
    pub y0: StateVector,
    /// Closed-form solution where one exists.
    pub reference: Option<Arc<ReferenceFn>>,
    /// Sensible default for `t_end` in studies.
    pub default_t_end: f64,
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        hamiltonian: Arc<dyn Hamiltonian>,
        y0: StateVector,
        default_t_end: f64,
    ) -> Self {
        assert_eq!(
            y0.len(),
            2 * hamiltonian.dof(),
            "initial state does not match the Hamiltonian dimension"
        );
        ProblemSpec {
            name: name.into(),
            hamiltonian,
            y0,
            reference: None,
            default_t_end,
        }
    }

    pub fn poly_degree(&self) -> Option<u32> {
        self.hamiltonian.poly_degree()
    }

    pub fn initial_energy(&self) -> f64 {
        self.hamiltonian.energy(&self.y0)
    }
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("y0", &self.y0)
            .field("poly_degree", &self.poly_degree())
            .finish()
    }
}

/// Cubic pendulum `H(q, p) = p^2/2 + q^2/2 - q^3/6`, started at
/// `(q, p) = (0, 1)`.
pub fn cubic_pendulum() -> ProblemSpec {
    let h = PolynomialHamiltonian::new(
        1,
        vec![
            Term::new(0.5, vec![0, 2]),
            Term::new(0.5, vec![2, 0]),
            Term::new(-1.0 / 6.0, vec![3, 0]),
        ],
    )
    .expect("static problem definition");
    ProblemSpec::new(
        "pendulum3",
        Arc::new(h),
        StateVector::new(vec![0.0, 1.0]).unwrap(),
        10.0,
    )
}

/// Degree-six oscillator
/// `H(q, p) = p^3/3 - p/2 + q^6/30 + q^4/4 - q^3/3 + 1/6`
/// from `(q, p) = (0.2, 0.5)`; a reversible system on which symmetric
/// methods without energy conservation show a visible drift.
pub fn fhp_sextic() -> ProblemSpec {
    let h = PolynomialHamiltonian::new(
        1,
        vec![
            Term::new(1.0 / 3.0, vec![0, 3]),
            Term::new(-0.5, vec![0, 1]),
            Term::new(1.0 / 30.0, vec![6, 0]),
            Term::new(0.25, vec![4, 0]),
            Term::new(-1.0 / 3.0, vec![3, 0]),
            Term::new(1.0 / 6.0, vec![0, 0]),
        ],
    )
    .expect("static problem definition");
    ProblemSpec::new(
        "fhp6",
        Arc::new(h),
        StateVector::new(vec![0.2, 0.5]).unwrap(),
        250.0,
    )
}

/// Planar two-body problem
/// `H = (p1^2 + p2^2)/2 - 1/sqrt(q1^2 + q2^2)` started at perihelion of
/// an orbit with eccentricity `e`:
/// `y0 = (1 - e, 0, 0, sqrt((1+e)/(1-e)))`, period `2 pi`.
///
/// The energy is not polynomial, so the quadrature node count must be
/// chosen explicitly; enough nodes push the quadrature error below
/// roundoff and the methods conserve H to machine precision.
pub fn kepler(e: f64) -> Result<ProblemSpec> {
    if !(0.0..1.0).contains(&e) {
        return Err(Error::InvalidEccentricity(e));
    }
    let h = CallbackHamiltonian::new(
        2,
        |y: &[f64]| {
            let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
            0.5 * (y[2] * y[2] + y[3] * y[3]) - 1.0 / r
        },
        |y: &[f64], out: &mut [f64]| {
            let r2 = y[0] * y[0] + y[1] * y[1];
            let inv_r3 = 1.0 / (r2 * r2.sqrt());
            out[0] = y[0] * inv_r3;
            out[1] = y[1] * inv_r3;
            out[2] = y[2];
            out[3] = y[3];
        },
    );
    let y0 = StateVector::new(vec![1.0 - e, 0.0, 0.0, ((1.0 + e) / (1.0 - e)).sqrt()])?;
    Ok(ProblemSpec::new("kepler", Arc::new(h), y0, 50.0))
}

/// Harmonic oscillator `H = p^2/2 + q^2/2` with its rotation flow as the
/// closed-form reference; the quadratic case on which the linear two-step
/// method with Simpson nodes reduces to the classical Milne-Simpson
/// update.
pub fn harmonic_oscillator() -> ProblemSpec {
    let h = PolynomialHamiltonian::new(
        1,
        vec![Term::new(0.5, vec![0, 2]), Term::new(0.5, vec![2, 0])],
    )
    .expect("static problem definition");
    let y0 = StateVector::new(vec![0.0, 1.0]).unwrap();
    let (q0, p0) = (y0[0], y0[1]);
    let mut spec = ProblemSpec::new("sho", Arc::new(h), y0, 10.0);
    spec.reference = Some(Arc::new(move |t: f64| {
        StateVector::new(vec![
            q0 * t.cos() + p0 * t.sin(),
            p0 * t.cos() - q0 * t.sin(),
        ])
        .expect("rotation of a finite state")
    }));
    spec
}

/// Look up a built-in problem by its CLI name.
pub fn by_name(name: &str) -> Result<ProblemSpec> {
    match name {
        "pendulum3" => Ok(cubic_pendulum()),
        "fhp6" => Ok(fhp_sextic()),
        "kepler" => kepler(0.6),
        "sho" => Ok(harmonic_oscillator()),
        other => Err(Error::Parse(format!(
            "unknown problem '{other}' (expected pendulum3, fhp6, kepler or sho)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::gradient_check;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn pendulum_initial_data() {
        let p = cubic_pendulum();
        assert_eq!(p.initial_energy(), 0.5);
        assert_eq!(p.hamiltonian.gradient(&p.y0), vec![0.0, 1.0]);
        assert_eq!(p.poly_degree(), Some(3));
    }

    #[test]
    fn sextic_initial_data() {
        let p = fhp_sextic();
        assert_eq!(p.poly_degree(), Some(6));
        assert_eq!(p.y0.as_slice(), &[0.2, 0.5]);
        // independent dense-grid Horner evaluation of the same energy
        let (q, p_mom) = (0.2_f64, 0.5_f64);
        let q3 = q * q * q;
        let horner = (p_mom / 3.0 * p_mom * p_mom - 0.5 * p_mom)
            + q3 * (q * (q * q / 30.0 + 0.25) - 1.0 / 3.0)
            + 1.0 / 6.0;
        let direct = p.initial_energy();
        assert!((direct - horner).abs() <= 1e-15 * direct.abs().max(1.0));
    }

    #[test]
    fn kepler_initial_data() {
        let p = kepler(0.6).unwrap();
        assert_eq!(p.y0.as_slice(), &[0.4, 0.0, 0.0, 2.0]);
        assert!((p.initial_energy() + 0.5).abs() < 1e-15);
        let circular = kepler(0.0).unwrap();
        assert_eq!(circular.y0.as_slice(), &[1.0, 0.0, 0.0, 1.0]);
        assert!((circular.initial_energy() + 0.5).abs() < 1e-15);
        assert!(kepler(1.0).is_err());
        assert!(kepler(-0.1).is_err());
    }

    #[test]
    fn oscillator_reference_flow() {
        let p = harmonic_oscillator();
        let reference = p.reference.as_ref().unwrap();
        for t in [0.0, 0.5, 1.7, 6.3] {
            let y = reference(t);
            assert!((y[0] - t.sin()).abs() < 1e-15);
            assert!((y[1] - t.cos()).abs() < 1e-15);
            let energy = p.hamiltonian.energy(&y);
            assert!((energy - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn gradients_agree_with_finite_differences_near_y0() {
        let mut rng = StdRng::seed_from_u64(41);
        for problem in [
            cubic_pendulum(),
            fhp_sextic(),
            kepler(0.6).unwrap(),
            harmonic_oscillator(),
        ] {
            let base = problem.y0.as_slice().to_vec();
            let check = |y: &[f64]| {
                let err = gradient_check(problem.hamiltonian.as_ref(), y, 1e-6);
                assert!(
                    err <= 1e-6,
                    "{}: gradient off by {err} at {y:?}",
                    problem.name
                );
            };
            check(&base);
            for _ in 0..20 {
                let y: Vec<f64> = base
                    .iter()
                    .map(|v| v + rng.random_range(-0.1..0.1))
                    .collect();
                check(&y);
            }
        }
    }

    #[test]
    fn lookup_by_name() {
        assert_eq!(by_name("pendulum3").unwrap().name, "pendulum3");
        assert_eq!(by_name("fhp6").unwrap().name, "fhp6");
        assert_eq!(by_name("kepler").unwrap().y0.len(), 4);
        assert_eq!(by_name("sho").unwrap().name, "sho");
        assert!(by_name("lorenz").is_err());
    }
}
