//! Quadrature rules on [0, 1] with a verified degree of precision.
//!
//! Three node families are supported. Their degrees of precision decide
//! which polynomial energies a discrete line integral conserves exactly:
//! a rule must integrate polynomials up to degree `2 nu - 1` where `nu` is
//! the total degree of the Hamiltonian.
//!
//! | family  | degree of precision    | conserves `deg H <= ...` |
//! |---------|------------------------|--------------------------|
//! | gauss   | `2k - 1`               | `k`                      |
//! | lobatto | `2k - 3`               | `k - 1`                  |
//! | uniform | `k-1` (k even), `k` (k odd) | `ceil(k / 2)`       |
//!
//! Gauss and Lobatto nodes come from Newton iteration on Legendre
//! polynomials (tolerance 1e-15, at most 100 sweeps) mapped from [-1, 1]
//! to [0, 1]. Uniform rules take interpolatory weights from the moment
//! system on equispaced nodes and are capped at k = 9, past which
//! Newton-Cotes weights change sign and lose stability.

use std::fmt;

use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;
const MAX_NODES: usize = 15;
const MAX_UNIFORM_NODES: usize = 9;

/// Node distribution of a quadrature rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeFamily {
    Lobatto,
    Gauss,
    Uniform,
}

impl fmt::Display for NodeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeFamily::Lobatto => write!(f, "lobatto"),
            NodeFamily::Gauss => write!(f, "gauss"),
            NodeFamily::Uniform => write!(f, "uniform"),
        }
    }
}

impl std::str::FromStr for NodeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lobatto" => Ok(NodeFamily::Lobatto),
            "gauss" => Ok(NodeFamily::Gauss),
            "uniform" => Ok(NodeFamily::Uniform),
            other => Err(Error::Parse(format!("unknown node family '{other}'"))),
        }
    }
}

/// Nodes `c_1 < ... < c_k` in [0, 1] with weights `b_1..b_k` and the
/// rule's degree of precision.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    family: NodeFamily,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    degree: u32,
}

impl QuadratureRule {
    /// Build the k-node rule of the given family.
    ///
    /// Lobatto and uniform need `k >= 2`; Gauss accepts `k >= 1`. All
    /// families are capped at 15 nodes (9 for uniform). The constructed
    /// rule is checked for exactness on monomials up to its degree of
    /// precision before being returned.
    pub fn new(family: NodeFamily, k: usize) -> Result<Self> {
        let unsupported = Err(Error::UnsupportedRule { family, k });
        let (nodes, weights, degree) = match family {
            NodeFamily::Gauss => {
                if !(1..=MAX_NODES).contains(&k) {
                    return unsupported;
                }
                let (n, w) = gauss_nodes_weights(k);
                (n, w, 2 * k as u32 - 1)
            }
            NodeFamily::Lobatto => {
                if !(2..=MAX_NODES).contains(&k) {
                    return unsupported;
                }
                let (n, w) = lobatto_nodes_weights(k);
                (n, w, 2 * k as u32 - 3)
            }
            NodeFamily::Uniform => {
                if !(2..=MAX_UNIFORM_NODES).contains(&k) {
                    return unsupported;
                }
                let mut nodes: Vec<f64> = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
                let mut weights = interpolatory_weights(&nodes)?;
                // the moment solve leaves a small asymmetric residue
                sort_symmetric(&mut nodes, &mut weights);
                let degree = if k.is_multiple_of(2) {
                    k as u32 - 1
                } else {
                    k as u32
                };
                (nodes, weights, degree)
            }
        };
        let rule = QuadratureRule {
            family,
            nodes,
            weights,
            degree,
        };
        rule.verify()?;
        Ok(rule)
    }

    pub fn lobatto(k: usize) -> Result<Self> {
        Self::new(NodeFamily::Lobatto, k)
    }

    pub fn gauss(k: usize) -> Result<Self> {
        Self::new(NodeFamily::Gauss, k)
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(NodeFamily::Uniform, k)
    }

    pub fn family(&self) -> NodeFamily {
        self.family
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Largest monomial degree the rule integrates exactly.
    pub fn degree_of_precision(&self) -> u32 {
        self.degree
    }

    /// `sum_i b_i f(c_i)` for a scalar integrand on [0, 1].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&c, &b)| b * f(c))
            .sum()
    }

    /// `sum_i b_i f(c_i)` for a vector-valued integrand on [0, 1].
    pub fn integrate_vec<F: FnMut(f64) -> Vec<f64>>(&self, mut f: F) -> Vec<f64> {
        let mut acc: Option<Vec<f64>> = None;
        for (&c, &b) in self.nodes.iter().zip(&self.weights) {
            let v = f(c);
            match acc.as_mut() {
                None => acc = Some(v.iter().map(|x| b * x).collect()),
                Some(a) => {
                    for (ai, vi) in a.iter_mut().zip(&v) {
                        *ai += b * vi;
                    }
                }
            }
        }
        acc.unwrap_or_default()
    }

    /// Quadrature error on the monomial `tau^j`.
    pub fn monomial_error(&self, j: u32) -> f64 {
        let exact = 1.0 / f64::from(j + 1);
        self.integrate(|t| t.powi(j as i32)) - exact
    }

    fn verify(&self) -> Result<()> {
        for j in 0..=self.degree {
            let err = self.monomial_error(j).abs();
            if err > 1e-12 {
                return Err(Error::UnsupportedRule {
                    family: self.family,
                    k: self.nodes.len(),
                });
            }
        }
        Ok(())
    }
}

/// Minimal node count for which the family's rule integrates the discrete
/// line integral of a degree-`nu` polynomial Hamiltonian exactly, i.e. the
/// smallest k with degree of precision at least `2 nu - 1`.
///
/// Callback Hamiltonians carry no degree, so `nu = None` is an error and
/// the node count must be chosen explicitly.
pub fn required_nodes(family: NodeFamily, nu: Option<u32>) -> Result<usize> {
    let nu = nu.ok_or(Error::NonPolynomial)?;
    let nu = nu.max(1) as usize;
    let k = match family {
        NodeFamily::Gauss => nu,
        NodeFamily::Lobatto => nu + 1,
        // smallest k with ceil(k/2) >= nu
        NodeFamily::Uniform => 2 * nu - 1,
    };
    match family {
        NodeFamily::Uniform if k > MAX_UNIFORM_NODES => Err(Error::UnsupportedRule { family, k }),
        _ if k > MAX_NODES => Err(Error::UnsupportedRule { family, k }),
        _ => Ok(k),
    }
}

/// Legendre polynomial `P_n` and derivative `P_n'` at `x` in [-1, 1],
/// by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for j in 2..=n {
        let jf = j as f64;
        let p_next = ((2.0 * jf - 1.0) * x * p - (jf - 1.0) * p_prev) / jf;
        p_prev = p;
        p = p_next;
    }
    let dp = if (x.abs() - 1.0).abs() < 1e-30 {
        // limit value at the endpoints
        let n = n as f64;
        0.5 * n * (n + 1.0) * x.powi(n as i32 - 1)
    } else {
        (n as f64) * (x * p - p_prev) / (x * x - 1.0)
    };
    (p, dp)
}

/// Gauss-Legendre nodes and weights on [0, 1].
fn gauss_nodes_weights(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    for i in 1..=k {
        // Chebyshev-style initial guess for the i-th root of P_k
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (k as f64 + 0.5)).cos();
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = legendre(k, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= NEWTON_TOL {
                break;
            }
        }
        let (_, dp) = legendre(k, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // the guesses descend in x, so 0.5 (1 - x) ascends in [0, 1]
        nodes.push(0.5 * (1.0 - x));
        weights.push(0.5 * w);
    }
    sort_symmetric(&mut nodes, &mut weights);
    (nodes, weights)
}

/// Lobatto nodes and weights on [0, 1]: endpoints plus the roots of
/// `P_{k-1}'`.
fn lobatto_nodes_weights(k: usize) -> (Vec<f64>, Vec<f64>) {
    let n = k - 1; // interior nodes are roots of P_n'
    let endpoint_w = 2.0 / (k as f64 * (k as f64 - 1.0));
    let mut xs = vec![-1.0];
    for i in 1..n {
        // interior roots of P_n' interlace cos(pi i / n)
        let mut x = (std::f64::consts::PI * i as f64 / n as f64).cos();
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = legendre(n, x);
            // (1 - x^2) P_n'' = 2 x P_n' - n (n + 1) P_n
            let ddp = (2.0 * x * dp - (n as f64) * (n as f64 + 1.0) * p) / (1.0 - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() <= NEWTON_TOL {
                break;
            }
        }
        xs.push(x);
    }
    xs.push(1.0);
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut nodes = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    for &x in &xs {
        let (p, _) = legendre(n, x);
        let w = if (x.abs() - 1.0).abs() < 1e-14 {
            endpoint_w
        } else {
            2.0 / (k as f64 * (k as f64 - 1.0) * p * p)
        };
        nodes.push(0.5 * (x + 1.0));
        weights.push(0.5 * w);
    }
    // pin the endpoints exactly
    nodes[0] = 0.0;
    nodes[k - 1] = 1.0;
    sort_symmetric(&mut nodes, &mut weights);
    (nodes, weights)
}

/// Force exact mirror symmetry `c_i + c_{k+1-i} = 1`, `b_i = b_{k+1-i}`
/// by averaging the two halves; the Newton results match to roundoff and
/// this removes the last-bit asymmetry.
fn sort_symmetric(nodes: &mut [f64], weights: &mut [f64]) {
    let k = nodes.len();
    for i in 0..k / 2 {
        let j = k - 1 - i;
        let c = 0.5 * (nodes[i] + (1.0 - nodes[j]));
        nodes[i] = c;
        nodes[j] = 1.0 - c;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if k % 2 == 1 {
        nodes[k / 2] = 0.5;
    }
}

/// Interpolatory weights on the given nodes: solve the moment system
/// `sum_i b_i c_i^j = 1/(j+1)` for `j = 0..k-1` by Gaussian elimination
/// with partial pivoting.
fn interpolatory_weights(nodes: &[f64]) -> Result<Vec<f64>> {
    let k = nodes.len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (j, row) in a.iter_mut().enumerate() {
        for (i, &c) in nodes.iter().enumerate() {
            row[i] = c.powi(j as i32);
        }
        row[k] = 1.0 / (j as f64 + 1.0);
    }
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        if a[col][col].abs() < 1e-300 {
            return Err(Error::Parse("singular moment system".into()));
        }
        let pivot_row = a[col].clone();
        for row in a.iter_mut().skip(col + 1) {
            let factor = row[col] / pivot_row[col];
            for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= factor * p;
            }
        }
    }
    let mut w = vec![0.0; k];
    for row in (0..k).rev() {
        let mut rhs = a[row][k];
        for idx in row + 1..k {
            rhs -= a[row][idx] * w[idx];
        }
        w[row] = rhs / a[row][row];
    }
    Ok(w)
}
