//! Hamiltonian functions: sparse polynomials with exact gradients, plus
//! callback-defined systems for non-polynomial energies.
//!
//! The integrators only ever see the [`Hamiltonian`] trait: an energy
//! `H(y)`, its gradient, the number of degrees of freedom, and an optional
//! total polynomial degree. The degree is what ties a polynomial energy to
//! the quadrature rule that conserves it exactly; callback systems report
//! `None` and leave the node count to the caller.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::state::StateVector;

/// An autonomous Hamiltonian on `R^{2m}`.
///
/// Implementations must be immutable after construction; the solvers share
/// them freely across steps (and callers may share them across threads).
pub trait Hamiltonian: Send + Sync {
    /// Degrees of freedom m; states have length 2m.
    fn dof(&self) -> usize;

    /// Energy at `y`. `y.len()` must equal `2 * self.dof()`.
    fn energy(&self, y: &[f64]) -> f64;

    /// Gradient at `y`, written into `out` (length 2m).
    fn gradient_into(&self, y: &[f64], out: &mut [f64]);

    /// Total degree when the energy is a polynomial in `(q, p)`.
    fn poly_degree(&self) -> Option<u32> {
        None
    }

    /// Convenience allocating wrapper around [`Hamiltonian::gradient_into`].
    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        self.gradient_into(y, &mut out);
        out
    }
}

/// Evaluate the energy of `h` at a checked state.
pub fn eval_energy(h: &dyn Hamiltonian, y: &StateVector) -> f64 {
    assert_eq!(
        y.len(),
        2 * h.dof(),
        "state length {} does not match Hamiltonian dimension 2m = {}",
        y.len(),
        2 * h.dof()
    );
    h.energy(y)
}

/// Evaluate the gradient of `h` at a checked state.
pub fn eval_gradient(h: &dyn Hamiltonian, y: &StateVector) -> Vec<f64> {
    assert_eq!(
        y.len(),
        2 * h.dof(),
        "state length {} does not match Hamiltonian dimension 2m = {}",
        y.len(),
        2 * h.dof()
    );
    h.gradient(y)
}

/// One monomial `coefficient * prod_j y_j^{exponents[j]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coefficient: f64,
    pub exponents: Vec<u32>,
}

impl Term {
    pub fn new(coefficient: f64, exponents: Vec<u32>) -> Self {
        Term {
            coefficient,
            exponents,
        }
    }

    fn total_degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

/// A sparse polynomial Hamiltonian in the 2m phase-space variables.
///
/// Duplicate exponent vectors are merged on construction and terms whose
/// coefficient cancels to zero are dropped. The 2m partial derivatives are
/// differentiated term by term once, up front, since the integrators
/// evaluate the gradient k times per fixed-point sweep.
#[derive(Debug, Clone)]
pub struct PolynomialHamiltonian {
    dof: usize,
    terms: Vec<Term>,
    degree: u32,
    grad_terms: Vec<Vec<Term>>,
}

impl PolynomialHamiltonian {
    /// Build from degrees of freedom m and a term list over 2m variables.
    pub fn new(dof: usize, terms: Vec<Term>) -> Result<Self> {
        if dof == 0 {
            return Err(Error::OddDimension(0));
        }
        let width = 2 * dof;
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for t in terms {
            if t.exponents.len() != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    got: t.exponents.len(),
                });
            }
            if !t.coefficient.is_finite() {
                return Err(Error::NonFinite(0));
            }
            *merged.entry(t.exponents).or_insert(0.0) += t.coefficient;
        }
        let terms: Vec<Term> = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(e, c)| Term::new(c, e))
            .collect();
        let degree = terms.iter().map(Term::total_degree).max().unwrap_or(0);
        let grad_terms = (0..width)
            .map(|var| {
                terms
                    .iter()
                    .filter(|t| t.exponents[var] > 0)
                    .map(|t| {
                        let e = t.exponents[var];
                        let mut exps = t.exponents.clone();
                        exps[var] = e - 1;
                        Term::new(t.coefficient * f64::from(e), exps)
                    })
                    .collect()
            })
            .collect();
        Ok(PolynomialHamiltonian {
            dof,
            terms,
            degree,
            grad_terms,
        })
    }

    /// Total degree nu (0 for a constant or empty polynomial).
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// The merged, sorted term list.
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    fn eval_terms(terms: &[Term], y: &[f64]) -> f64 {
        terms
            .iter()
            .map(|t| {
                let mut acc = t.coefficient;
                for (v, &e) in y.iter().zip(&t.exponents) {
                    if e > 0 {
                        acc *= v.powi(e as i32);
                    }
                }
                acc
            })
            .sum()
    }
}

impl Hamiltonian for PolynomialHamiltonian {
    fn dof(&self) -> usize {
        self.dof
    }

    fn energy(&self, y: &[f64]) -> f64 {
        debug_assert_eq!(y.len(), 2 * self.dof);
        Self::eval_terms(&self.terms, y)
    }

    fn gradient_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), 2 * self.dof);
        for (o, terms) in out.iter_mut().zip(&self.grad_terms) {
            *o = Self::eval_terms(terms, y);
        }
    }

    fn poly_degree(&self) -> Option<u32> {
        Some(self.degree)
    }
}

type EnergyFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A Hamiltonian defined by user closures, for energies with no polynomial
/// structure (gravitational potentials, trigonometric terms, ...).
#[derive(Clone)]
pub struct CallbackHamiltonian {
    dof: usize,
    energy: Arc<EnergyFn>,
    gradient: Arc<GradientFn>,
}

impl CallbackHamiltonian {
    pub fn new<E, G>(dof: usize, energy: E, gradient: G) -> Self
    where
        E: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        CallbackHamiltonian {
            dof,
            energy: Arc::new(energy),
            gradient: Arc::new(gradient),
        }
    }
}

impl std::fmt::Debug for CallbackHamiltonian {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CallbackHamiltonian")
            .field("dof", &self.dof)
            .finish()
    }
}

impl Hamiltonian for CallbackHamiltonian {
    fn dof(&self) -> usize {
        self.dof
    }

    fn energy(&self, y: &[f64]) -> f64 {
        (self.energy)(y)
    }

    fn gradient_into(&self, y: &[f64], out: &mut [f64]) {
        (self.gradient)(y, out)
    }
}

/// Central finite-difference gradient, the standard consistency oracle for
/// gradient implementations.
pub fn finite_difference_gradient(h: &dyn Hamiltonian, y: &[f64], step: f64) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    let mut work = y.to_vec();
    for i in 0..y.len() {
        work[i] = y[i] + step;
        let plus = h.energy(&work);
        work[i] = y[i] - step;
        let minus = h.energy(&work);
        work[i] = y[i];
        out[i] = (plus - minus) / (2.0 * step);
    }
    out
}

/// Largest componentwise deviation between the analytic gradient and the
/// central finite difference with the given step.
pub fn gradient_check(h: &dyn Hamiltonian, y: &[f64], step: f64) -> f64 {
    let analytic = h.gradient(y);
    let numeric = finite_difference_gradient(h, y, step);
    analytic
        .iter()
        .zip(&numeric)
        .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
}
