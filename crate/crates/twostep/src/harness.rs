//! Experiment drivers: convergence studies, energy-drift comparisons and
//! their CSV serializations.
//!
//! Runs are fully deterministic: no randomness enters anywhere, so two
//! identical invocations produce byte-identical output. Real numbers are
//! printed with 17 significant digits, which round-trips `f64` exactly.

use crate::error::{Error, Result};
use crate::problems::ProblemSpec;
use crate::state::norm2;
use crate::trajectory::{integrate, Starter, Trajectory};
use crate::MethodConfig;

/// `log2(err_coarse / err_fine)` for a stepsize halving, the standard
/// observed-order estimate. `None` when either error is not positive.
pub fn estimate_order(err_coarse: f64, err_fine: f64) -> Option<f64> {
    if err_coarse > 0.0 && err_fine > 0.0 && err_coarse.is_finite() && err_fine.is_finite() {
        Some((err_coarse / err_fine).log2())
    } else {
        None
    }
}

/// A completed convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub problem: String,
    pub method: String,
    /// `"relative"` when errors are scaled by the reference norm,
    /// `"absolute"` otherwise.
    pub error_metric: String,
    pub rows: Vec<ConvergenceRow>,
}

/// One stepsize row of a convergence study. Equality is bitwise on the
/// real fields so CSV round-trip tests are exact.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub h: f64,
    /// Distance of the last computed point from the reference solution at
    /// `t_end` (relative when the reference norm exceeds one).
    pub final_error: f64,
    /// Observed order against the previous (coarser) row.
    pub order_estimate: Option<f64>,
    /// `max_n |H(y_n) - H(y_0)|` over the run.
    pub max_energy_error: f64,
    /// Residual at the last accepted point.
    pub final_residual: f64,
    /// Observed order of the residual against the previous row.
    pub residual_order: Option<f64>,
    /// Populated instead of the metrics when this row's run failed.
    pub failure: Option<String>,
}

impl PartialEq for ConvergenceRow {
    fn eq(&self, other: &Self) -> bool {
        let feq = |a: f64, b: f64| a.to_bits() == b.to_bits();
        let oeq = |a: &Option<f64>, b: &Option<f64>| match (a, b) {
            (Some(x), Some(y)) => feq(*x, *y),
            (None, None) => true,
            _ => false,
        };
        feq(self.h, other.h)
            && feq(self.final_error, other.final_error)
            && oeq(&self.order_estimate, &other.order_estimate)
            && feq(self.max_energy_error, other.max_energy_error)
            && feq(self.final_residual, other.final_residual)
            && oeq(&self.residual_order, &other.residual_order)
            && self.failure == other.failure
    }
}

/// Integer step count for `t_end / h`, rejecting non-integral grids.
pub fn step_count(t_end: f64, h: f64) -> Result<usize> {
    let n = (t_end / h).round();
    if n < 1.0 || ((n * h - t_end) / t_end.max(1.0)).abs() > 1e-9 {
        return Err(Error::NonIntegralSteps { t_end, h });
    }
    Ok(n as usize)
}

/// Run `problem` with `cfg` at every stepsize in `h_list` up to `t_end`
/// and assemble the error/order/conservation table.
///
/// The reference for the final-time error is the problem's closed-form
/// solution when it has one, otherwise a self-reference run of the same
/// method at one eighth of the smallest stepsize. Rows whose runs fail
/// keep their failure message; other rows are unaffected.
pub fn run_convergence(
    problem: &ProblemSpec,
    cfg: &MethodConfig,
    h_list: &[f64],
    t_end: f64,
) -> Result<ConvergenceReport> {
    if h_list.is_empty() {
        return Err(Error::Parse("empty stepsize list".into()));
    }
    for h in h_list {
        step_count(t_end, *h)?;
    }
    let ham = problem.hamiltonian.as_ref();

    let reference: Vec<f64> = match &problem.reference {
        Some(f) => f(t_end).into_vec(),
        None => {
            let h_min = h_list.iter().cloned().fold(f64::INFINITY, f64::min);
            let h_ref = h_min / 8.0;
            let n_ref = step_count(t_end, h_ref)?;
            let traj = integrate(ham, cfg, &problem.y0, h_ref, n_ref, Starter::Hbvm4)?;
            traj.records.last().unwrap().y.as_slice().to_vec()
        }
    };
    let ref_norm = norm2(&reference);
    let relative = ref_norm > 1.0;
    let scale = if relative { ref_norm } else { 1.0 };

    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let n = step_count(t_end, h)?;
        match integrate(ham, cfg, &problem.y0, h, n, Starter::Hbvm4) {
            Ok(traj) => {
                let last = traj.last();
                let diff: f64 = last
                    .y
                    .iter()
                    .zip(&reference)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let final_error = diff / scale;
                let prev_ok = rows.last().filter(|r| r.failure.is_none());
                let order_estimate =
                    prev_ok.and_then(|p| estimate_order(p.final_error, final_error));
                let residual_order = prev_ok
                    .and_then(|p| estimate_order(p.final_residual.abs(), last.residual.abs()));
                rows.push(ConvergenceRow {
                    h,
                    final_error,
                    order_estimate,
                    max_energy_error: traj.max_energy_error(),
                    final_residual: last.residual,
                    residual_order,
                    failure: None,
                });
            }
            Err(e) => rows.push(ConvergenceRow {
                h,
                final_error: f64::NAN,
                order_estimate: None,
                max_energy_error: f64::NAN,
                final_residual: f64::NAN,
                residual_order: None,
                failure: Some(e.to_string()),
            }),
        }
    }

    Ok(ConvergenceReport {
        problem: problem.name.clone(),
        method: method_label(cfg),
        error_metric: if relative { "relative" } else { "absolute" }.into(),
        rows,
    })
}

/// One labelled `(t, |H - H0|)` series of a drift comparison.
#[derive(Debug, Clone)]
pub struct DriftSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub failure: Option<String>,
}

impl DriftSeries {
    pub fn max_drift(&self) -> f64 {
        self.points.iter().fold(0.0_f64, |acc, p| acc.max(p.1))
    }
}

/// Integrate every labelled configuration over the same grid and record
/// the absolute energy error along each run. `t_end` is rounded to the
/// nearest whole number of steps.
pub fn run_drift(
    problem: &ProblemSpec,
    configs: &[(String, MethodConfig)],
    h: f64,
    t_end: f64,
) -> Vec<DriftSeries> {
    let n = ((t_end / h).round() as usize).max(1);
    configs
        .iter()
        .map(|(label, cfg)| {
            match integrate(
                problem.hamiltonian.as_ref(),
                cfg,
                &problem.y0,
                h,
                n,
                Starter::Hbvm4,
            ) {
                Ok(traj) => DriftSeries {
                    label: label.clone(),
                    points: drift_points(&traj),
                    failure: None,
                },
                Err(e) => DriftSeries {
                    label: label.clone(),
                    points: Vec::new(),
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect()
}

fn drift_points(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.records
        .iter()
        .map(|r| (r.t, r.energy_error.abs()))
        .collect()
}

/// Short human/machine label for a configuration, e.g. `mk:lobatto:5`.
pub fn method_label(cfg: &MethodConfig) -> String {
    let kind = match cfg.kind {
        crate::MethodKind::TwoStepCorrected => "mk",
        crate::MethodKind::TwoStepLinear => "mk-lin",
        crate::MethodKind::Hbvm4 => "hbvm4",
        crate::MethodKind::Trapezoidal => "trap",
    };
    let mut label = format!("{kind}:{}:{}", cfg.rule.family(), cfg.rule.len());
    if cfg.drift_correct {
        label.push_str(":dc");
    }
    label
}

// ---------------------------------------------------------------------------
// CSV serialization (comma separated, header row, LF line endings).
// ---------------------------------------------------------------------------

/// 17 significant digits; parses back to the identical `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# problem={}\n", self.problem));
        out.push_str(&format!("# method={}\n", self.method));
        out.push_str(&format!("# error_metric={}\n", self.error_metric));
        out.push_str(
            "h,final_error,order_estimate,max_energy_error,final_residual,residual_order,failure\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt_f64(r.h),
                fmt_f64(r.final_error),
                fmt_opt(r.order_estimate),
                fmt_f64(r.max_energy_error),
                fmt_f64(r.final_residual),
                fmt_opt(r.residual_order),
                r.failure.clone().unwrap_or_default(),
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut problem = String::new();
        let mut method = String::new();
        let mut error_metric = String::new();
        let mut rows = Vec::new();
        let mut saw_header = false;
        for line in text.lines() {
            if let Some(meta) = line.strip_prefix("# ") {
                match meta.split_once('=') {
                    Some(("problem", v)) => problem = v.into(),
                    Some(("method", v)) => method = v.into(),
                    Some(("error_metric", v)) => error_metric = v.into(),
                    _ => return Err(Error::Parse(format!("unknown metadata line '{line}'"))),
                }
                continue;
            }
            if !saw_header {
                saw_header = true; // column header
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::Parse(format!(
                    "expected 7 fields, got {}",
                    fields.len()
                )));
            }
            let f = |s: &str| -> Result<f64> {
                if s.is_empty() {
                    Ok(f64::NAN)
                } else {
                    s.parse()
                        .map_err(|_| Error::Parse(format!("bad float '{s}'")))
                }
            };
            let opt = |s: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    Ok(Some(f(s)?))
                }
            };
            rows.push(ConvergenceRow {
                h: f(fields[0])?,
                final_error: f(fields[1])?,
                order_estimate: opt(fields[2])?,
                max_energy_error: f(fields[3])?,
                final_residual: f(fields[4])?,
                residual_order: opt(fields[5])?,
                failure: if fields[6].is_empty() {
                    None
                } else {
                    Some(fields[6].into())
                },
            });
        }
        Ok(ConvergenceReport {
            problem,
            method,
            error_metric,
            rows,
        })
    }
}

/// Per-step trajectory CSV: `t`, the 2m state components, then the
/// energy error, residual and sweep count of the step.
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let dim = traj.records[0].y.len();
    let mut out = String::from("t");
    for i in 0..dim {
        out.push_str(&format!(",y{i}"));
    }
    out.push_str(",energy_error,residual,fp_iterations\n");
    for r in &traj.records {
        out.push_str(&fmt_f64(r.t));
        for v in r.y.iter() {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push_str(&format!(
            ",{},{},{}\n",
            fmt_f64(r.energy_error),
            fmt_f64(r.residual),
            r.fp_iterations
        ));
    }
    out
}

/// Long-format drift CSV: one `(config, t, abs_h_error)` row per point.
pub fn drift_to_csv(series: &[DriftSeries]) -> String {
    let mut out = String::from("config,t,abs_h_error\n");
    for s in series {
        for (t, e) in &s.points {
            out.push_str(&format!("{},{},{}\n", s.label, fmt_f64(*t), fmt_f64(*e)));
        }
    }
    out
}
