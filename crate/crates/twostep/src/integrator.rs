//! Energy-preserving two-step methods and their building blocks.
//!
//! The corrected method advances `(y0, y1)` to the solution `y2 = z` of
//!
//! `z = y0 + 2h J sum_i b_i grad H(gamma(c_i)) + G(y0, y1, z)`
//!
//! where `gamma` is the quadratic curve through the three states and the
//! scalar multiple `G = (r / |a|^2) a` of the averaged gradient `a` tilts
//! the update just enough to cancel the discrete line integral of
//! `grad H` along `gamma`. With a quadrature rule of degree of precision
//! at least `2 nu - 1`, that line integral equals `H(y2) - H(y0)` exactly
//! for a polynomial energy of degree `nu`, so the step conserves H by
//! construction. Dropping `G` leaves a generalized linear two-step method
//! of the same (fourth) order; the correction itself is `O(h^5)`.
//!
//! All implicit equations are solved by fixed-point iteration, which
//! contracts once `h` is below a problem-dependent threshold. The starter
//! step is a discretized fourth-order HBVM solved the same way over two
//! half-intervals, and a one-step stage-trapezoidal method is included as
//! the order-two baseline.

use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::interpolant::{basis_weights, eval_weighted, QuadraticCurve};
use crate::quadrature::QuadratureRule;
use crate::state::{apply_j_into, dot, norm2, norm_inf, StateVector};

/// Which stepping scheme a [`MethodConfig`] drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    /// Two-step method with the energy correction term.
    TwoStepCorrected,
    /// Its linear part: the same update without the correction.
    TwoStepLinear,
    /// Repeated fourth-order HBVM steps (also used as the starter).
    Hbvm4,
    /// One-step stage-trapezoidal baseline of order two.
    Trapezoidal,
}

/// Initial guess for the two-step fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Predictor {
    /// `z_0 = 2 y1 - y0`.
    #[default]
    Extrapolate,
    /// Solve the linear method first and start the corrected iteration
    /// from its solution.
    LinearMethod,
}

/// Method selection plus solver controls.
#[derive(Debug, Clone)]
pub struct MethodConfig {
    pub kind: MethodKind,
    pub rule: QuadratureRule,
    /// Relative fixed-point tolerance; the stopping test is
    /// `max|z_{s+1} - z_s| <= fp_tol * (1 + max|y0|)`.
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub predictor: Predictor,
    /// Apply the post-step gradient-descent energy correction.
    pub drift_correct: bool,
    /// Below this averaged-gradient norm the energy correction is skipped
    /// for the step (near-equilibrium guard against dividing by ~0).
    pub a_norm_floor: f64,
}

impl MethodConfig {
    pub fn new(kind: MethodKind, rule: QuadratureRule) -> Self {
        MethodConfig {
            kind,
            rule,
            fp_tol: 1e-14,
            fp_max_iter: 200,
            predictor: Predictor::Extrapolate,
            drift_correct: false,
            a_norm_floor: 1e-14,
        }
    }

    pub fn with_drift_correction(mut self, on: bool) -> Self {
        self.drift_correct = on;
        self
    }

    pub fn with_predictor(mut self, predictor: Predictor) -> Self {
        self.predictor = predictor;
        self
    }

    fn validate(&self) {
        assert!(self.fp_tol > 0.0, "fp_tol must be positive");
        assert!(self.fp_max_iter >= 1, "fp_max_iter must be at least 1");
        assert!(self.a_norm_floor > 0.0, "a_norm_floor must be positive");
    }
}

/// Per-step solver diagnostics.
#[derive(Debug, Clone, Default)]
pub struct StepInfo {
    /// Fixed-point sweeps used (predictor sweeps included).
    pub fp_iterations: usize,
    /// Residual of the second orthogonality condition at the accepted
    /// point; `O(h^5)` for both two-step methods.
    pub residual: f64,
    /// Euclidean norm of the applied energy correction (zero for the
    /// linear method or when the correction was skipped).
    pub correction_norm: f64,
    /// Set when the averaged gradient fell below the norm floor and the
    /// step silently degraded to the linear method.
    pub correction_skipped: bool,
}

// ---------------------------------------------------------------------------
// Discrete line-integral building blocks on an explicit curve.
// ---------------------------------------------------------------------------

/// `a = sum_i b_i grad H(gamma(c_i))`, the discretized average of the
/// gradient along the curve.
pub fn averaged_gradient(
    h: &dyn Hamiltonian,
    rule: &QuadratureRule,
    curve: &QuadraticCurve,
) -> Vec<f64> {
    assert_eq!(
        curve.start().len(),
        2 * h.dof(),
        "curve/Hamiltonian dimension mismatch"
    );
    rule.integrate_vec(|c| h.gradient(&curve.eval(c)))
}

/// `sum_i b_i (2 c_i - 1) grad H(gamma(c_i))`, the first-moment companion
/// of [`averaged_gradient`].
pub fn first_moment_gradient(
    h: &dyn Hamiltonian,
    rule: &QuadratureRule,
    curve: &QuadraticCurve,
) -> Vec<f64> {
    assert_eq!(
        curve.start().len(),
        2 * h.dof(),
        "curve/Hamiltonian dimension mismatch"
    );
    rule.nodes().iter().zip(rule.weights()).fold(
        vec![0.0; curve.start().len()],
        |mut acc, (&c, &b)| {
            let g = h.gradient(&curve.eval(c));
            let w = b * (2.0 * c - 1.0);
            for (a, gi) in acc.iter_mut().zip(&g) {
                *a += w * gi;
            }
            acc
        },
    )
}

/// The scalar residual
/// `r = -2 (z - 2 y1 + y0)^T sum_i b_i (2 c_i - 1) grad H(gamma(c_i))`.
///
/// It measures how far the plain update is from satisfying the discrete
/// energy condition; the corrected method re-injects it along `a`.
pub fn energy_residual(h: &dyn Hamiltonian, rule: &QuadratureRule, curve: &QuadraticCurve) -> f64 {
    let s = first_moment_gradient(h, rule, curve);
    -2.0 * dot(&curve.curvature(), &s)
}

/// The correction vector `G = (r / |a|_2^2) a`.
///
/// Fails with [`Error::DegenerateGradient`] when `|a|_2` is below `floor`,
/// which happens near equilibria where the whole update degenerates.
pub fn energy_correction(
    h: &dyn Hamiltonian,
    rule: &QuadratureRule,
    curve: &QuadraticCurve,
    floor: f64,
) -> Result<Vec<f64>> {
    let a = averaged_gradient(h, rule, curve);
    let a_sq = dot(&a, &a);
    let norm = a_sq.sqrt();
    if norm < floor {
        return Err(Error::DegenerateGradient { norm, floor });
    }
    let r = energy_residual(h, rule, curve);
    Ok(a.iter().map(|ai| ai * r / a_sq).collect())
}

/// Discrete line integral of `grad H` along the curve,
/// `(z - y0)^T a + 2 (z - 2y1 + y0)^T s`.
///
/// When the rule is exact for the integrands this equals
/// `H(z) - H(y0)`; the corrected step drives it to zero.
pub fn discrete_line_integral(
    h: &dyn Hamiltonian,
    rule: &QuadratureRule,
    curve: &QuadraticCurve,
) -> f64 {
    let a = averaged_gradient(h, rule, curve);
    let u: Vec<f64> = curve
        .end()
        .iter()
        .zip(curve.start().iter())
        .map(|(z, y)| z - y)
        .collect();
    dot(&u, &a) - energy_residual(h, rule, curve)
}

// ---------------------------------------------------------------------------
// Node bookkeeping shared by the solvers.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum NodeKind {
    /// `gamma(c) = y0` exactly (basis weights (1, 0, 0)).
    StartPoint,
    /// `gamma(c) = y1` exactly (basis weights (0, 1, 0)).
    MiddlePoint,
    Moving,
}

#[derive(Debug, Clone)]
struct NodeData {
    weight: f64,
    odd_weight: f64,
    w: (f64, f64, f64),
    kind: NodeKind,
}

fn node_data(rule: &QuadratureRule) -> Vec<NodeData> {
    rule.nodes()
        .iter()
        .zip(rule.weights())
        .map(|(&c, &b)| {
            let w = basis_weights(c);
            let kind = if w == (1.0, 0.0, 0.0) {
                NodeKind::StartPoint
            } else if w == (0.0, 1.0, 0.0) {
                NodeKind::MiddlePoint
            } else {
                NodeKind::Moving
            };
            NodeData {
                weight: b,
                odd_weight: b * (2.0 * c - 1.0),
                w,
                kind,
            }
        })
        .collect()
}

/// Accumulate `a = sum b_i grad H(gamma(c_i))` and
/// `s = sum b_i (2 c_i - 1) grad H(gamma(c_i))` for the curve through
/// `(y0, mid, end)`. Gradients at nodes pinned to `y0` or `mid` come from
/// the caches when provided, saving two evaluations per sweep for odd
/// Lobatto rules.
#[allow(clippy::too_many_arguments)]
fn node_sums(
    h: &dyn Hamiltonian,
    nodes: &[NodeData],
    y0: &[f64],
    mid: &[f64],
    end: &[f64],
    grad_start: Option<&[f64]>,
    grad_middle: Option<&[f64]>,
    gamma: &mut [f64],
    grad: &mut [f64],
    a: &mut [f64],
    s: &mut [f64],
) {
    a.fill(0.0);
    s.fill(0.0);
    for node in nodes {
        let g: &[f64] = match (node.kind, grad_start, grad_middle) {
            (NodeKind::StartPoint, Some(g0), _) => g0,
            (NodeKind::MiddlePoint, _, Some(g1)) => g1,
            _ => {
                eval_weighted(y0, mid, end, node.w.0, node.w.1, node.w.2, gamma);
                h.gradient_into(gamma, grad);
                &*grad
            }
        };
        for i in 0..a.len() {
            a[i] += node.weight * g[i];
            s[i] += node.odd_weight * g[i];
        }
    }
}

fn iterate_fixed_point<F>(
    mut map: F,
    mut z: Vec<f64>,
    tol: f64,
    max_iter: usize,
    blowup: f64,
) -> Result<(Vec<f64>, usize)>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut next = vec![0.0; z.len()];
    for sweep in 1..=max_iter {
        map(&z, &mut next);
        let mut delta = 0.0_f64;
        for (a, b) in next.iter().zip(&z) {
            delta = delta.max((a - b).abs());
        }
        std::mem::swap(&mut z, &mut next);
        if delta <= tol {
            return Ok((z, sweep));
        }
        if norm_inf(&z) > blowup {
            return Err(Error::FixedPointDivergence { iterations: sweep });
        }
    }
    Err(Error::FixedPointDivergence {
        iterations: max_iter,
    })
}

// ---------------------------------------------------------------------------
// The two-step methods.
// ---------------------------------------------------------------------------

struct TwoStepOutcome {
    z: Vec<f64>,
    iterations: usize,
    skipped: bool,
}

fn two_step_solve(
    h: &dyn Hamiltonian,
    cfg: &MethodConfig,
    y0: &[f64],
    y1: &[f64],
    step: f64,
    z0: Vec<f64>,
    corrected: bool,
) -> Result<TwoStepOutcome> {
    let n = y0.len();
    let nodes = node_data(&cfg.rule);
    let grad_start = nodes
        .iter()
        .any(|nd| nd.kind == NodeKind::StartPoint)
        .then(|| h.gradient(y0));
    let grad_middle = nodes
        .iter()
        .any(|nd| nd.kind == NodeKind::MiddlePoint)
        .then(|| h.gradient(y1));

    let tol = cfg.fp_tol * (1.0 + norm_inf(y0));
    let blowup = 1e6 * (1.0 + norm2(y0));

    let mut gamma = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut a = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut ja = vec![0.0; n];
    let mut skipped = false;

    let map = |z: &[f64], out: &mut [f64]| {
        node_sums(
            h,
            &nodes,
            y0,
            y1,
            z,
            grad_start.as_deref(),
            grad_middle.as_deref(),
            &mut gamma,
            &mut grad,
            &mut a,
            &mut s,
        );
        apply_j_into(&a, &mut ja);
        for i in 0..n {
            out[i] = y0[i] + 2.0 * step * ja[i];
        }
        if corrected {
            let a_sq = dot(&a, &a);
            if a_sq.sqrt() < cfg.a_norm_floor {
                skipped = true;
            } else {
                let mut r = 0.0;
                for i in 0..n {
                    r += (z[i] - 2.0 * y1[i] + y0[i]) * s[i];
                }
                let coeff = -2.0 * r / a_sq;
                for i in 0..n {
                    out[i] += coeff * a[i];
                }
            }
        }
    };

    let (z, iterations) = iterate_fixed_point(map, z0, tol, cfg.fp_max_iter, blowup)?;
    Ok(TwoStepOutcome {
        z,
        iterations,
        skipped,
    })
}

fn extrapolated(y0: &[f64], y1: &[f64]) -> Vec<f64> {
    y0.iter().zip(y1).map(|(a, b)| 2.0 * b - a).collect()
}

fn two_step_diagnostics(
    h: &dyn Hamiltonian,
    cfg: &MethodConfig,
    y0: &[f64],
    y1: &[f64],
    z: &[f64],
    corrected: bool,
    skipped: bool,
) -> (f64, f64) {
    let n = y0.len();
    let nodes = node_data(&cfg.rule);
    let mut gamma = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut a = vec![0.0; n];
    let mut s = vec![0.0; n];
    node_sums(
        h, &nodes, y0, y1, z, None, None, &mut gamma, &mut grad, &mut a, &mut s,
    );
    let mut r = 0.0;
    for i in 0..n {
        r += (z[i] - 2.0 * y1[i] + y0[i]) * s[i];
    }
    r *= -2.0;
    let a_norm = norm2(&a);
    let correction_norm = if corrected && !skipped && a_norm >= cfg.a_norm_floor {
        r.abs() / a_norm
    } else {
        0.0
    };
    (r, correction_norm)
}

fn check_two_step_inputs(
    h: &dyn Hamiltonian,
    cfg: &MethodConfig,
    y0: &[f64],
    y1: &[f64],
    step: f64,
) {
    cfg.validate();
    assert!(step > 0.0, "stepsize must be positive");
    assert_eq!(y0.len(), 2 * h.dof(), "y0/Hamiltonian dimension mismatch");
    assert_eq!(y0.len(), y1.len(), "y0/y1 dimension mismatch");
}

/// One step of the energy-preserving corrected method: `(y0, y1) -> y2`
/// over a window of width `2 * step`.
pub fn step_corrected(
    h: &dyn Hamiltonian,
    cfg: &MethodConfig,
    y0: &StateVector,
    y1: &StateVector,
    step: f64,
) -> Result<(StateVector, StepInfo)> {
    check_two_step_inputs(h, cfg, y0, y1, step);
    let (z0, predictor_iters) = match cfg.predictor {
        Predictor::Extrapolate => (extrapolated(y0, y1), 0),
        Predictor::LinearMethod => {
            let pre = two_step_solve(h, cfg, y0, y1, step, extrapolated(y0, y1), false)?;
            (pre.z, pre.iterations)
        }
    };
    let out = two_step_solve(h, cfg, y0, y1, step, z0, true)?;
    let (residual, correction_norm) =
        two_step_diagnostics(h, cfg, y0, y1, &out.z, true, out.skipped);
    let info = StepInfo {
        fp_iterations: predictor_iters + out.iterations,
        residual,
        correction_norm,
        correction_skipped: out.skipped,
    };
    Ok((StateVector::new(out.z)?, info))
}

/// One step of the linear two-step method (no energy correction).
pub fn step_linear(
    h: &dyn Hamiltonian,
    cfg: &MethodConfig,
    y0: &StateVector,
    y1: &StateVector,
    step: f64,
) -> Result<(StateVector, StepInfo)> {
    check_two_step_inputs(h, cfg, y0, y1, step);
    let out = two_step_solve(h, cfg, y0, y1, step, extrapolated(y0, y1), false)?;
    let (residual, _) = two_step_diagnostics(h, cfg, y0, y1, &out.z, false, false);
    let info = StepInfo {
        fp_iterations: out.iterations,
        residual,
        correction_norm: 0.0,
        correction_skipped: false,
    };
    Ok((StateVector::new(out.z)?, info))
}

// ---------------------------------------------------------------------------
// Fourth-order HBVM starter.
// ---------------------------------------------------------------------------

/// One fourth-order HBVM step covering `[t0, t0 + 2 half]`.
///
/// Solves the two orthogonality conditions
///
/// `u2 - y0        = 2 * half * J sum_i b_i grad H(gamma(c_i))`
/// `u2 - 2u1 + y0  = 3 * half * J sum_i b_i (2 c_i - 1) grad H(gamma(c_i))`
///
/// for the internal stage `u1 ~ y(t0 + half)` (fourth order) and the end
/// point `u2 ~ y(t0 + 2 half)` (fifth-order local error), with the curve
/// built on `(y0, u1, u2)`. Both blocks are updated simultaneously from
/// the previous sweep. To advance a trajectory by `h`, call with
/// `half = h / 2` and keep `u2`.
pub fn step_hbvm4(
    h: &dyn Hamiltonian,
    cfg: &MethodConfig,
    y0: &StateVector,
    half: f64,
) -> Result<(StateVector, StateVector, usize)> {
    cfg.validate();
    assert!(half > 0.0, "stepsize must be positive");
    assert_eq!(y0.len(), 2 * h.dof(), "y0/Hamiltonian dimension mismatch");
    let n = y0.len();
    let nodes = node_data(&cfg.rule);
    let grad_start = nodes
        .iter()
        .any(|nd| nd.kind == NodeKind::StartPoint)
        .then(|| h.gradient(y0));

    let tol = cfg.fp_tol * (1.0 + y0.norm_inf());
    let blowup = 1e6 * (1.0 + y0.norm());

    let mut gamma = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut a = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut ja = vec![0.0; n];
    let mut js = vec![0.0; n];

    let map = |uu: &[f64], out: &mut [f64]| {
        let (u1, u2) = uu.split_at(n);
        node_sums(
            h,
            &nodes,
            y0,
            u1,
            u2,
            grad_start.as_deref(),
            None,
            &mut gamma,
            &mut grad,
            &mut a,
            &mut s,
        );
        apply_j_into(&a, &mut ja);
        apply_j_into(&s, &mut js);
        let (o1, o2) = out.split_at_mut(n);
        for i in 0..n {
            o2[i] = y0[i] + 2.0 * half * ja[i];
            o1[i] = 0.5 * (u2[i] + y0[i] - 3.0 * half * js[i]);
        }
    };

    let mut z0 = Vec::with_capacity(2 * n);
    z0.extend_from_slice(y0);
    z0.extend_from_slice(y0);
    let (uu, iterations) = iterate_fixed_point(map, z0, tol, cfg.fp_max_iter, blowup)?;
    let u1 = StateVector::from_slice(&uu[..n])?;
    let u2 = StateVector::from_slice(&uu[n..])?;
    Ok((u1, u2, iterations))
}

// ---------------------------------------------------------------------------
// Stage-trapezoidal baseline.
// ---------------------------------------------------------------------------

/// One step of the k-stage trapezoidal method:
/// `y1 = y0 + h sum_i b_i J grad H(Y_i)` with silent stages
/// `Y_i = (1 - c_i) y0 + c_i y1`.
///
/// Order two; conserves polynomial energies of degree `nu` when the rule
/// has degree of precision at least `nu - 1`, and reduces to the classical
/// trapezoidal method on linear problems.
pub fn step_trapezoidal(
    h: &dyn Hamiltonian,
    cfg: &MethodConfig,
    y0: &StateVector,
    step: f64,
) -> Result<(StateVector, usize)> {
    cfg.validate();
    assert!(step > 0.0, "stepsize must be positive");
    assert_eq!(y0.len(), 2 * h.dof(), "y0/Hamiltonian dimension mismatch");
    let n = y0.len();
    let grad_y0 = h.gradient(y0);
    let has_zero_node = cfg.rule.nodes().first() == Some(&0.0);

    let tol = cfg.fp_tol * (1.0 + y0.norm_inf());
    let blowup = 1e6 * (1.0 + y0.norm());

    let mut stage = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut a = vec![0.0; n];
    let mut ja = vec![0.0; n];

    let nodes: Vec<f64> = cfg.rule.nodes().to_vec();
    let weights: Vec<f64> = cfg.rule.weights().to_vec();
    let map = |z: &[f64], out: &mut [f64]| {
        a.fill(0.0);
        for (&c, &b) in nodes.iter().zip(&weights) {
            let g: &[f64] = if c == 0.0 && has_zero_node {
                &grad_y0
            } else {
                for i in 0..n {
                    stage[i] = (1.0 - c) * y0[i] + c * z[i];
                }
                h.gradient_into(&stage, &mut grad);
                &grad
            };
            for i in 0..n {
                a[i] += b * g[i];
            }
        }
        apply_j_into(&a, &mut ja);
        for i in 0..n {
            out[i] = y0[i] + step * ja[i];
        }
    };

    // explicit Euler predictor
    let mut z0 = vec![0.0; n];
    apply_j_into(&grad_y0, &mut z0);
    for i in 0..n {
        z0[i] = y0[i] + step * z0[i];
    }
    let (z, iterations) = iterate_fixed_point(map, z0, tol, cfg.fp_max_iter, blowup)?;
    Ok((StateVector::new(z)?, iterations))
}

// ---------------------------------------------------------------------------
// Roundoff drift correction.
// ---------------------------------------------------------------------------

/// One gradient-descent step toward the level set `H(y) = h0`:
///
/// `y* = y - alpha * grad H(y) / |grad H(y)|` with
/// `alpha = (H(y) - h0) / |grad H(y)|`.
///
/// Used to stop roundoff from accumulating into a secular energy drift
/// over very long runs. Fails when the gradient norm is below `floor`.
pub fn drift_correction(
    h: &dyn Hamiltonian,
    y: &StateVector,
    h0: f64,
    floor: f64,
) -> Result<StateVector> {
    assert_eq!(y.len(), 2 * h.dof(), "state/Hamiltonian dimension mismatch");
    let g = h.gradient(y);
    let g_norm = norm2(&g);
    if g_norm < floor {
        return Err(Error::DegenerateGradient {
            norm: g_norm,
            floor,
        });
    }
    let scale = (h.energy(y) - h0) / (g_norm * g_norm);
    let corrected: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi - scale * gi).collect();
    StateVector::new(corrected)
}
