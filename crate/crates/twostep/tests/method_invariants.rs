//! Method-level invariants that go beyond single-module unit tests:
//! contraction of the fixed-point map, the O(h^5) size of the correction
//! and residual, Milne-Simpson equivalence on quadratic energies, and the
//! qualitative long-run behavior of the corrected vs. linear methods.

use twostep::hamiltonian::{Hamiltonian, PolynomialHamiltonian, Term};
use twostep::integrator::{averaged_gradient, energy_correction};
use twostep::problems;
use twostep::state::apply_j;
use twostep::trajectory::{integrate, Starter};
use twostep::{MethodConfig, MethodKind, QuadraticCurve, QuadratureRule, StateVector};

fn corrected(rule: QuadratureRule) -> MethodConfig {
    MethodConfig::new(MethodKind::TwoStepCorrected, rule)
}

fn linear(rule: QuadratureRule) -> MethodConfig {
    MethodConfig::new(MethodKind::TwoStepLinear, rule)
}

/// One sweep of the corrected fixed-point map built from the public
/// line-integral operations, independent of the internal solver.
fn corrected_map(
    ham: &dyn Hamiltonian,
    rule: &QuadratureRule,
    y0: &[f64],
    y1: &[f64],
    z: &[f64],
    h: f64,
) -> Vec<f64> {
    let curve = QuadraticCurve::from_slices(y0, y1, z);
    let a = averaged_gradient(ham, rule, &curve);
    let g = energy_correction(ham, rule, &curve, 1e-14).unwrap();
    let ja = apply_j(&a);
    (0..z.len())
        .map(|i| y0[i] + 2.0 * h * ja[i] + g[i])
        .collect()
}

#[test]
fn fixed_point_sweeps_contract_monotonically() {
    let p = problems::cubic_pendulum();
    let ham = p.hamiltonian.as_ref();
    let rule = QuadratureRule::lobatto(5).unwrap();
    for h in [0.5, 0.25] {
        let cfg = corrected(rule.clone());
        let traj = integrate(ham, &cfg, &p.y0, h, 1, Starter::Hbvm4).unwrap();
        let y1 = traj.last().y.clone();
        let mut z: Vec<f64> = y1
            .iter()
            .zip(p.y0.iter())
            .map(|(b, a)| 2.0 * b - a)
            .collect();
        let mut deltas = Vec::new();
        for _ in 0..25 {
            let next = corrected_map(ham, &rule, &p.y0, &y1, &z, h);
            let delta = next
                .iter()
                .zip(&z)
                .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
            deltas.push(delta);
            z = next;
        }
        for w in deltas.windows(2).skip(3) {
            // monotone until the update hits roundoff
            if w[0] > 1e-14 {
                assert!(
                    w[1] < w[0],
                    "h={h}: sweep update grew from {:.3e} to {:.3e} ({deltas:?})",
                    w[0],
                    w[1]
                );
            }
        }
        assert!(deltas.last().unwrap() < &1e-13, "h={h}: no convergence");
    }
}

/// The correction applied at an accepted point shrinks like h^5: halving
/// the step divides its norm by roughly 32.
#[test]
fn correction_norm_scales_at_fifth_order() {
    let p = problems::cubic_pendulum();
    let cfg = |_: ()| corrected(QuadratureRule::lobatto(5).unwrap());
    let mut norms = Vec::new();
    for exp in 3..=7 {
        let h = 0.5_f64.powi(exp);
        let traj = integrate(
            p.hamiltonian.as_ref(),
            &cfg(()),
            &p.y0,
            h,
            2,
            Starter::Hbvm4,
        )
        .unwrap();
        norms.push(traj.last().correction_norm);
    }
    for w in norms.windows(2) {
        let ratio = w[0] / w[1];
        assert!(
            (24.0..=42.0).contains(&ratio),
            "correction ratio {ratio} outside [24, 42]; norms {norms:?}"
        );
    }
}

/// The residual at points accepted by the linear method is O(h^5).
#[test]
fn residual_scales_at_fifth_order_at_linear_points() {
    for (problem, rule) in [
        (
            problems::cubic_pendulum(),
            QuadratureRule::lobatto(5).unwrap(),
        ),
        (problems::fhp_sextic(), QuadratureRule::lobatto(7).unwrap()),
    ] {
        let mut residuals = Vec::new();
        for exp in 4..=7 {
            let h = 0.5_f64.powi(exp);
            let traj = integrate(
                problem.hamiltonian.as_ref(),
                &linear(rule.clone()),
                &problem.y0,
                h,
                2,
                Starter::Hbvm4,
            )
            .unwrap();
            residuals.push(traj.last().residual.abs());
        }
        for w in residuals.windows(2) {
            let ratio = w[0] / w[1];
            assert!(
                (25.0..=40.0).contains(&ratio),
                "{}: residual ratio {ratio} outside [25, 40]; values {residuals:?}",
                problem.name
            );
        }
    }
}

/// On any quadratic energy, the linear method with Simpson nodes is the
/// Milne-Simpson update; the gradient is linear so the oracle is a 2x2
/// solve of (I - (h/3) J A) y2 = y0 + (h/3) J A (y0 + 4 y1).
#[test]
fn simpson_nodes_reduce_to_milne_simpson_on_quadratics() {
    // H = q^2 + p^2/2 + 0.4 q p
    let ham = PolynomialHamiltonian::new(
        1,
        vec![
            Term::new(1.0, vec![2, 0]),
            Term::new(0.5, vec![0, 2]),
            Term::new(0.4, vec![1, 1]),
        ],
    )
    .unwrap();
    let a_mat = [[2.0, 0.4], [0.4, 1.0]]; // gradient matrix
    let h = 0.1;
    let oracle = |y0: &[f64], y1: &[f64]| -> [f64; 2] {
        let g = |y: &[f64]| {
            [
                a_mat[0][0] * y[0] + a_mat[0][1] * y[1],
                a_mat[1][0] * y[0] + a_mat[1][1] * y[1],
            ]
        };
        let (g0, g1) = (g(y0), g(y1));
        let c = h / 3.0;
        // rhs = y0 + c J (g0 + 4 g1)
        let rhs = [
            y0[0] + c * (g0[1] + 4.0 * g1[1]),
            y0[1] - c * (g0[0] + 4.0 * g1[0]),
        ];
        // M = I - c J A; J A = [[a10, a11], [-a00, -a01]]
        let m = [
            [1.0 - c * a_mat[1][0], -c * a_mat[1][1]],
            [c * a_mat[0][0], 1.0 + c * a_mat[0][1]],
        ];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        [
            (m[1][1] * rhs[0] - m[0][1] * rhs[1]) / det,
            (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det,
        ]
    };

    let cfg = linear(QuadratureRule::lobatto(3).unwrap());
    let y0 = StateVector::new(vec![0.3, 0.9]).unwrap();
    let traj = integrate(&ham, &cfg, &y0, h, 12, Starter::Hbvm4).unwrap();
    for n in 2..traj.records.len() {
        let expect = oracle(&traj.records[n - 2].y, &traj.records[n - 1].y);
        let got = &traj.records[n].y;
        for i in 0..2 {
            assert!(
                (got[i] - expect[i]).abs() <= 1e-13,
                "step {n} component {i}: {} vs {}",
                got[i],
                expect[i]
            );
        }
    }
}

/// A constant-gradient energy generates a straight-line flow; the curve
/// data is collinear, the residual vanishes and the corrected step
/// reproduces the flow to roundoff.
#[test]
fn constant_gradient_flow_is_reproduced_exactly() {
    let ham = PolynomialHamiltonian::new(
        1,
        vec![Term::new(2.0, vec![1, 0]), Term::new(3.0, vec![0, 1])],
    )
    .unwrap();
    // y' = J (2, 3) = (3, -2)
    let flow = |t: f64| StateVector::new(vec![0.5 + 3.0 * t, 1.0 - 2.0 * t]).unwrap();
    let y0 = flow(0.0);
    let cfg = corrected(QuadratureRule::lobatto(5).unwrap());
    let h = 0.3;
    let traj = integrate(&ham, &cfg, &y0, h, 10, Starter::Exact(&flow)).unwrap();
    for (n, rec) in traj.records.iter().enumerate() {
        let exact = flow(n as f64 * h);
        for i in 0..2 {
            assert!(
                (rec.y[i] - exact[i]).abs() <= 1e-12,
                "step {n}: drifted from the linear flow"
            );
        }
        assert!(rec.residual.abs() <= 1e-13);
    }
}

/// Figure-style long pendulum run: the corrected method holds the energy
/// at roundoff over [0, 200 pi] with h = 0.5 while the linear method
/// oscillates well above it; the orbit stays bounded.
#[test]
fn long_pendulum_run_keeps_energy_flat() {
    let p = problems::cubic_pendulum();
    let ham = p.hamiltonian.as_ref();
    let h = 0.5;
    let n = (200.0 * std::f64::consts::PI / h).round() as usize;
    let rule = QuadratureRule::lobatto(5).unwrap();
    let flat = integrate(ham, &corrected(rule.clone()), &p.y0, h, n, Starter::Hbvm4).unwrap();
    let drifty = integrate(ham, &linear(rule), &p.y0, h, n, Starter::Hbvm4).unwrap();
    // per-step conservation is ~5e-14; over 1257 steps roundoff
    // accumulates a random walk, so the run-level bound is 1e-12
    assert!(
        flat.max_energy_error() <= 1e-12,
        "corrected drift {}",
        flat.max_energy_error()
    );
    assert!(drifty.max_energy_error() > 100.0 * flat.max_energy_error());
    let max_radius = flat
        .records
        .iter()
        .map(|r| r.y.norm())
        .fold(0.0_f64, f64::max);
    assert!(max_radius < 3.0, "orbit escaped: radius {max_radius}");
}

/// The linear method departs from the sextic oscillator's level curve but
/// remains bounded; the corrected method stays on it.
#[test]
fn sextic_linear_run_departs_level_curve_but_stays_bounded() {
    let p = problems::fhp_sextic();
    let ham = p.hamiltonian.as_ref();
    let rule = QuadratureRule::lobatto(7).unwrap();
    let h = 0.1;
    let n = (300.0_f64 / h).round() as usize;
    let on_level = integrate(ham, &corrected(rule.clone()), &p.y0, h, n, Starter::Hbvm4).unwrap();
    let off_level = integrate(ham, &linear(rule), &p.y0, h, n, Starter::Hbvm4).unwrap();
    assert!(on_level.max_energy_error() <= 1e-12);
    let drift = off_level.max_energy_error();
    assert!(drift > 1e-6, "expected a visible departure, got {drift}");
    assert!(drift < 1.0, "energy error {drift} no longer bounded");
    let max_norm = off_level
        .records
        .iter()
        .map(|r| r.y.norm_inf())
        .fold(0.0_f64, f64::max);
    assert!(max_norm < 5.0, "trajectory escaped: |y| up to {max_norm}");
}

/// Nine Lobatto nodes push the quadrature error of the non-polynomial
/// two-body energy below roundoff.
#[test]
fn kepler_with_nine_nodes_conserves_to_machine_precision() {
    let p = problems::kepler(0.6).unwrap();
    let cfg = corrected(QuadratureRule::lobatto(9).unwrap());
    let traj = integrate(
        p.hamiltonian.as_ref(),
        &cfg,
        &p.y0,
        0.05,
        500,
        Starter::Hbvm4,
    )
    .unwrap();
    assert!(
        traj.max_energy_error() <= 1e-12,
        "drift {}",
        traj.max_energy_error()
    );
}
