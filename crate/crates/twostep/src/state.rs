//! Phase-space states and the canonical symplectic structure.
//!
//! A state is a point `y = (q_1..q_m, p_1..p_m)` in `R^{2m}`: generalized
//! coordinates first, momenta second. The structure matrix
//! `J = [[0, I_m], [-I_m, 0]]` turns a gradient into the canonical vector
//! field `y' = J grad H(y)`.

use std::ops::Deref;

use crate::error::{Error, Result};

/// A point in phase space, stored as `(q_1..q_m, p_1..p_m)`.
///
/// Construction checks that the length is even (and nonzero) and that all
/// entries are finite; afterwards the vector is immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    /// Validate and wrap a raw vector.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() || !entries.len().is_multiple_of(2) {
            return Err(Error::OddDimension(entries.len()));
        }
        if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(StateVector(entries))
    }

    /// Copy a slice into a checked state vector.
    pub fn from_slice(entries: &[f64]) -> Result<Self> {
        Self::new(entries.to_vec())
    }

    /// Number of degrees of freedom m (the full vector has length 2m).
    pub fn dof(&self) -> usize {
        self.0.len() / 2
    }

    /// Coordinate block `q`.
    pub fn q(&self) -> &[f64] {
        &self.0[..self.dof()]
    }

    /// Momentum block `p`.
    pub fn p(&self) -> &[f64] {
        &self.0[self.dof()..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Max-norm, used by the fixed-point stopping rule.
    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.0)
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }
}

impl Deref for StateVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for StateVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Apply the canonical structure matrix: `J (v_q, v_p) = (v_p, -v_q)`.
///
/// Panics if `v` has odd length.
pub fn apply_j(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    apply_j_into(v, &mut out);
    out
}

/// In-place variant of [`apply_j`] writing into a caller buffer.
pub fn apply_j_into(v: &[f64], out: &mut [f64]) {
    assert_eq!(v.len(), out.len(), "output buffer length mismatch");
    assert!(
        v.len().is_multiple_of(2) && !v.is_empty(),
        "J acts on even-length vectors, got length {}",
        v.len()
    );
    let m = v.len() / 2;
    for i in 0..m {
        out[i] = v[m + i];
        out[m + i] = -v[i];
    }
}

pub(crate) fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
