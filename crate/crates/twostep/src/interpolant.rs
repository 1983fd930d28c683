//! The quadratic phase-space curve through three equally spaced states.
//!
//! Given `y0`, `y1` and an end state `z` (the new point, or the unknown of
//! a fixed-point sweep) at times `t0`, `t0 + h`, `t0 + 2h`, the curve
//! `gamma(tau)` for `tau` in [0, 1] interpolates them at `tau = 0, 1/2, 1`.
//! Evaluation goes through the weighted-average form
//!
//! `gamma(c) = (1 - 3c + 2c^2) y0 + 4c(1 - c) y1 + c(2c - 1) z`
//!
//! whose three scalar weights are precomputed once per quadrature node and
//! reused on every sweep.

use crate::state::StateVector;

/// Interpolation weights of the three states at parameter `c`.
///
/// They sum to one for every `c` (exactly so in exact arithmetic), and
/// reduce to `(1,0,0)`, `(0,1,0)`, `(0,0,1)` at `c = 0, 1/2, 1`.
pub fn basis_weights(c: f64) -> (f64, f64, f64) {
    (
        1.0 - 3.0 * c + 2.0 * c * c,
        4.0 * c * (1.0 - c),
        c * (2.0 * c - 1.0),
    )
}

/// The quadratic curve through `(0, y0)`, `(1/2, y1)`, `(1, end)`.
#[derive(Debug, Clone)]
pub struct QuadraticCurve {
    y0: StateVector,
    y1: StateVector,
    end: StateVector,
}

impl QuadraticCurve {
    /// Panics if the three states disagree on dimension.
    pub fn new(y0: StateVector, y1: StateVector, end: StateVector) -> Self {
        assert_eq!(y0.len(), y1.len(), "curve states must share dimension");
        assert_eq!(y0.len(), end.len(), "curve states must share dimension");
        QuadraticCurve { y0, y1, end }
    }

    pub fn from_slices(y0: &[f64], y1: &[f64], end: &[f64]) -> Self {
        Self::new(
            StateVector::from_slice(y0).expect("invalid y0"),
            StateVector::from_slice(y1).expect("invalid y1"),
            StateVector::from_slice(end).expect("invalid end state"),
        )
    }

    pub fn start(&self) -> &StateVector {
        &self.y0
    }

    pub fn middle(&self) -> &StateVector {
        &self.y1
    }

    pub fn end(&self) -> &StateVector {
        &self.end
    }

    /// Evaluate the curve. `tau` outside [0, 1] is allowed and simply
    /// extrapolates the quadratic; diagnostics use that.
    pub fn eval(&self, tau: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.y0.len()];
        self.eval_into(tau, &mut out);
        out
    }

    pub fn eval_into(&self, tau: f64, out: &mut [f64]) {
        let (w0, w1, w2) = basis_weights(tau);
        eval_weighted(&self.y0, &self.y1, &self.end, w0, w1, w2, out);
    }

    /// Curve tangent `gamma'(tau) = (z - y0) + 2 (z - 2 y1 + y0)(2 tau - 1)`,
    /// exposed for line-integral diagnostics.
    pub fn derivative(&self, tau: f64) -> Vec<f64> {
        let s = 2.0 * (2.0 * tau - 1.0);
        self.y0
            .iter()
            .zip(self.y1.iter())
            .zip(self.end.iter())
            .map(|((&a, &b), &z)| (z - a) + s * (z - 2.0 * b + a))
            .collect()
    }

    /// The second-difference vector `z - 2 y1 + y0`.
    pub fn curvature(&self) -> Vec<f64> {
        self.y0
            .iter()
            .zip(self.y1.iter())
            .zip(self.end.iter())
            .map(|((&a, &b), &z)| z - 2.0 * b + a)
            .collect()
    }
}

pub(crate) fn eval_weighted(
    y0: &[f64],
    y1: &[f64],
    end: &[f64],
    w0: f64,
    w1: f64,
    w2: f64,
    out: &mut [f64],
) {
    for i in 0..out.len() {
        out[i] = w0 * y0[i] + w1 * y1[i] + w2 * end[i];
    }
}
