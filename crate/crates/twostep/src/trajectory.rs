//! Driving a method over a full time grid.
//!
//! The two-step methods need a starter: a single step that produces `y1`
//! at fourth order or better while staying on the energy level set. The
//! default starter is one fourth-order HBVM step run over two
//! half-intervals so that it covers exactly one grid spacing. After that
//! the window `(y_n, y_{n+1}) -> y_{n+2}` slides one grid point at a time.

use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::integrator::{
    drift_correction, step_corrected, step_hbvm4, step_linear, step_trapezoidal, MethodConfig,
    MethodKind, StepInfo,
};
use crate::state::StateVector;

/// How the two-step recurrence obtains `y1`.
pub enum Starter<'a> {
    /// One energy-conserving fourth-order HBVM step of total length `h`.
    Hbvm4,
    /// A caller-supplied reference solution `t -> y(t)` (times measured
    /// from the start of the run); used in tests and error studies.
    Exact(&'a (dyn Fn(f64) -> StateVector + Sync)),
}

/// One accepted grid point with its solver diagnostics.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: f64,
    pub y: StateVector,
    /// `H(y_n) - H(y_0)`, signed.
    pub energy_error: f64,
    /// Residual of the second orthogonality condition at the accepted
    /// point (zero where the notion does not apply).
    pub residual: f64,
    pub fp_iterations: usize,
    pub correction_norm: f64,
    pub correction_skipped: bool,
}

/// A completed run: the record stream plus run-level metadata.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    /// Grid spacing.
    pub h: f64,
    /// Energy at the initial state, the conservation reference.
    pub initial_energy: f64,
    /// Events worth surfacing (skipped corrections and the like).
    pub warnings: Vec<String>,
}

impl Trajectory {
    /// Largest `|H(y_n) - H(y_0)|` over the whole record stream.
    pub fn max_energy_error(&self) -> f64 {
        self.records
            .iter()
            .fold(0.0_f64, |acc, r| acc.max(r.energy_error.abs()))
    }

    /// The last accepted record.
    pub fn last(&self) -> &StepRecord {
        self.records.last().expect("trajectory has at least y0")
    }
}

/// Integrate `n_steps` grid steps of size `h` from `y0` at `t = 0`.
///
/// For the two-step kinds the first step comes from `starter` and every
/// later point from the configured recurrence; the one-step kinds ignore
/// `starter`. With `cfg.drift_correct` set, every newly accepted point is
/// projected back toward the initial energy level before being recorded.
pub fn integrate(
    ham: &dyn Hamiltonian,
    cfg: &MethodConfig,
    y0: &StateVector,
    h: f64,
    n_steps: usize,
    starter: Starter<'_>,
) -> Result<Trajectory> {
    assert!(h > 0.0, "stepsize must be positive");
    assert!(n_steps >= 1, "need at least one step");
    assert_eq!(y0.len(), 2 * ham.dof(), "y0/Hamiltonian dimension mismatch");

    let h0 = ham.energy(y0);
    let mut traj = Trajectory {
        records: Vec::with_capacity(n_steps + 1),
        h,
        initial_energy: h0,
        warnings: Vec::new(),
    };
    traj.records.push(StepRecord {
        t: 0.0,
        y: y0.clone(),
        energy_error: 0.0,
        residual: 0.0,
        fp_iterations: 0,
        correction_norm: 0.0,
        correction_skipped: false,
    });

    match cfg.kind {
        MethodKind::Trapezoidal => {
            for n in 1..=n_steps {
                let (y, iters) = step_trapezoidal(ham, cfg, &traj.records[n - 1].y, h)
                    .map_err(|e| e.at_step(n))?;
                push_record(
                    ham,
                    cfg,
                    &mut traj,
                    n,
                    y,
                    StepInfo {
                        fp_iterations: iters,
                        ..StepInfo::default()
                    },
                )?;
            }
        }
        MethodKind::Hbvm4 => {
            for n in 1..=n_steps {
                let (_, y, iters) = step_hbvm4(ham, cfg, &traj.records[n - 1].y, h / 2.0)
                    .map_err(|e| e.at_step(n))?;
                push_record(
                    ham,
                    cfg,
                    &mut traj,
                    n,
                    y,
                    StepInfo {
                        fp_iterations: iters,
                        ..StepInfo::default()
                    },
                )?;
            }
        }
        MethodKind::TwoStepCorrected | MethodKind::TwoStepLinear => {
            let (y1, starter_iters) = match starter {
                Starter::Hbvm4 => {
                    let (_, u2, iters) =
                        step_hbvm4(ham, cfg, y0, h / 2.0).map_err(|e| e.at_step(1))?;
                    (u2, iters)
                }
                Starter::Exact(reference) => {
                    let y1 = reference(h);
                    if y1.len() != y0.len() {
                        return Err(Error::DimensionMismatch {
                            expected: y0.len(),
                            got: y1.len(),
                        }
                        .at_step(1));
                    }
                    (y1, 0)
                }
            };
            push_record(
                ham,
                cfg,
                &mut traj,
                1,
                y1,
                StepInfo {
                    fp_iterations: starter_iters,
                    ..StepInfo::default()
                },
            )?;

            for n in 2..=n_steps {
                let (prev2, prev1) = (&traj.records[n - 2].y, &traj.records[n - 1].y);
                let (y, info) = match cfg.kind {
                    MethodKind::TwoStepCorrected => step_corrected(ham, cfg, prev2, prev1, h),
                    _ => step_linear(ham, cfg, prev2, prev1, h),
                }
                .map_err(|e| e.at_step(n))?;
                push_record(ham, cfg, &mut traj, n, y, info)?;
            }
        }
    }
    Ok(traj)
}

fn push_record(
    ham: &dyn Hamiltonian,
    cfg: &MethodConfig,
    traj: &mut Trajectory,
    n: usize,
    y: StateVector,
    info: StepInfo,
) -> Result<()> {
    let y = if cfg.drift_correct {
        match drift_correction(ham, &y, traj.initial_energy, cfg.a_norm_floor) {
            Ok(fixed) => fixed,
            Err(Error::DegenerateGradient { .. }) => {
                traj.warnings.push(format!(
                    "step {n}: drift correction skipped (flat gradient)"
                ));
                y
            }
            Err(e) => return Err(e.at_step(n)),
        }
    } else {
        y
    };
    if info.correction_skipped {
        traj.warnings.push(format!(
            "step {n}: energy correction skipped (flat gradient)"
        ));
    }
    let energy_error = ham.energy(&y) - traj.initial_energy;
    traj.records.push(StepRecord {
        t: n as f64 * traj.h,
        y,
        energy_error,
        residual: info.residual,
        fp_iterations: info.fp_iterations,
        correction_norm: info.correction_norm,
        correction_skipped: info.correction_skipped,
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{PolynomialHamiltonian, Term};
    use crate::quadrature::QuadratureRule;

    fn pendulum() -> PolynomialHamiltonian {
        PolynomialHamiltonian::new(
            1,
            vec![
                Term::new(0.5, vec![0, 2]),
                Term::new(0.5, vec![2, 0]),
                Term::new(-1.0 / 6.0, vec![3, 0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_step_run_is_just_the_starter() {
        let h = pendulum();
        let cfg = MethodConfig::new(
            MethodKind::TwoStepCorrected,
            QuadratureRule::lobatto(5).unwrap(),
        );
        let y0 = StateVector::new(vec![0.0, 1.0]).unwrap();
        let traj = integrate(&h, &cfg, &y0, 0.25, 1, Starter::Hbvm4).unwrap();
        assert_eq!(traj.records.len(), 2);
        assert!(traj.max_energy_error() <= 1e-13);
    }

    #[test]
    fn corrected_run_keeps_energy_flat() {
        let h = pendulum();
        let cfg = MethodConfig::new(
            MethodKind::TwoStepCorrected,
            QuadratureRule::lobatto(5).unwrap(),
        );
        let y0 = StateVector::new(vec![0.0, 1.0]).unwrap();
        let traj = integrate(&h, &cfg, &y0, 0.25, 40, Starter::Hbvm4).unwrap();
        assert_eq!(traj.records.len(), 41);
        assert!(
            traj.max_energy_error() <= 1e-13,
            "max energy error {}",
            traj.max_energy_error()
        );
        let t_last = traj.last().t;
        assert!((t_last - 10.0).abs() < 1e-12);
    }

    #[test]
    fn linear_run_drifts_more_than_corrected() {
        let h = pendulum();
        let rule = QuadratureRule::lobatto(5).unwrap();
        let y0 = StateVector::new(vec![0.0, 1.0]).unwrap();
        let corrected = integrate(
            &h,
            &MethodConfig::new(MethodKind::TwoStepCorrected, rule.clone()),
            &y0,
            0.25,
            80,
            Starter::Hbvm4,
        )
        .unwrap();
        let linear = integrate(
            &h,
            &MethodConfig::new(MethodKind::TwoStepLinear, rule),
            &y0,
            0.25,
            80,
            Starter::Hbvm4,
        )
        .unwrap();
        assert!(linear.max_energy_error() > 10.0 * corrected.max_energy_error());
    }

    #[test]
    fn records_carry_time_grid() {
        let h = pendulum();
        let cfg = MethodConfig::new(MethodKind::Trapezoidal, QuadratureRule::lobatto(3).unwrap());
        let y0 = StateVector::new(vec![0.0, 1.0]).unwrap();
        let traj = integrate(&h, &cfg, &y0, 0.5, 6, Starter::Hbvm4).unwrap();
        for (n, r) in traj.records.iter().enumerate() {
            assert!((r.t - 0.5 * n as f64).abs() < 1e-15);
        }
    }
}
