//! Experiment harness for the energy-preserving two-step integrators.
//!
//! Subcommands: `integrate` (one run, per-step records), `converge`
//! (stepsize study), `drift` (energy-error series for several method
//! configurations) and `quadrature` (inspect a rule as JSON).

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use twostep::harness::{drift_to_csv, run_convergence, run_drift, step_count, trajectory_to_csv};
use twostep::problems::{self, ProblemSpec};
use twostep::trajectory::{integrate, Starter};
use twostep::{
    MethodConfig, MethodKind, NodeFamily, PolynomialHamiltonian, QuadratureRule, StateVector, Term,
};

#[derive(Parser)]
#[command(
    name = "twostep",
    version,
    about = "Energy-preserving two-step integrators for Hamiltonian systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one integration and write per-step records.
    Integrate(IntegrateArgs),
    /// Run a stepsize-halving convergence study.
    Converge(ConvergeArgs),
    /// Compare the energy drift of several configurations on one grid.
    Drift(DriftArgs),
    /// Print a quadrature rule (nodes, weights, degree) as JSON.
    Quadrature(QuadratureArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Corrected two-step method.
    Mk,
    /// Linear two-step method (no correction).
    MkLin,
    /// k-stage trapezoidal baseline.
    Trap,
}

impl From<MethodArg> for MethodKind {
    fn from(m: MethodArg) -> MethodKind {
        match m {
            MethodArg::Mk => MethodKind::TwoStepCorrected,
            MethodArg::MkLin => MethodKind::TwoStepLinear,
            MethodArg::Trap => MethodKind::Trapezoidal,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Lobatto,
    Gauss,
    Uniform,
}

impl From<FamilyArg> for NodeFamily {
    fn from(f: FamilyArg) -> NodeFamily {
        match f {
            FamilyArg::Lobatto => NodeFamily::Lobatto,
            FamilyArg::Gauss => NodeFamily::Gauss,
            FamilyArg::Uniform => NodeFamily::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct IntegrateArgs {
    /// Built-in problem name (pendulum3, fhp6, kepler, sho) or a path to
    /// a JSON polynomial-problem file.
    #[arg(long)]
    problem: String,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Node family of the quadrature rule.
    #[arg(long, value_enum)]
    nodes: FamilyArg,
    /// Node count of the quadrature rule.
    #[arg(long)]
    k: usize,
    /// Stepsize.
    #[arg(long)]
    h: f64,
    /// End of the integration interval (rounded to a whole number of steps).
    #[arg(long = "t-end")]
    t_end: f64,
    /// Project each accepted point back to the initial energy level.
    #[arg(long = "drift-correct", default_value_t = false)]
    drift_correct: bool,
    /// Fixed-point tolerance (relative to 1 + |y0|).
    #[arg(long = "fp-tol")]
    fp_tol: Option<f64>,
    /// Fixed-point sweep cap.
    #[arg(long = "fp-max-iter")]
    fp_max_iter: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long)]
    problem: String,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, value_enum)]
    nodes: FamilyArg,
    #[arg(long)]
    k: usize,
    /// Stepsizes: either a power range `2^-1..2^-8` or a comma list
    /// `0.5,0.25,0.125`.
    #[arg(long = "h-list")]
    h_list: String,
    #[arg(long = "t-end")]
    t_end: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DriftArgs {
    #[arg(long)]
    problem: String,
    /// Comma-separated configurations `method:family:k[:dc]`, e.g.
    /// `mk:lobatto:5,mk-lin:lobatto:5` (`:dc` turns on drift correction).
    #[arg(long)]
    configs: String,
    #[arg(long)]
    h: f64,
    #[arg(long = "t-end")]
    t_end: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QuadratureArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    k: usize,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Integrate(args) => cmd_integrate(args),
        Command::Converge(args) => cmd_converge(args),
        Command::Drift(args) => cmd_drift(args),
        Command::Quadrature(args) => cmd_quadrature(args),
    }
}

fn cmd_integrate(args: IntegrateArgs) -> Result<()> {
    let problem = load_problem(&args.problem)?;
    let rule = QuadratureRule::new(args.nodes.into(), args.k)?;
    let mut cfg = MethodConfig::new(args.method.into(), rule);
    cfg.drift_correct = args.drift_correct;
    if let Some(tol) = args.fp_tol {
        cfg.fp_tol = tol;
    }
    if let Some(cap) = args.fp_max_iter {
        cfg.fp_max_iter = cap;
    }
    let n = ((args.t_end / args.h).round() as usize).max(1);
    let traj = integrate(
        problem.hamiltonian.as_ref(),
        &cfg,
        &problem.y0,
        args.h,
        n,
        Starter::Hbvm4,
    )
    .with_context(|| format!("integrating {}", problem.name))?;
    for w in &traj.warnings {
        eprintln!("warning: {w}");
    }
    let text = match args.format {
        FormatArg::Csv => trajectory_to_csv(&traj),
        FormatArg::Json => {
            let records: Vec<_> = traj
                .records
                .iter()
                .map(|r| {
                    json!({
                        "t": r.t,
                        "y": r.y.as_slice(),
                        "energy_error": r.energy_error,
                        "residual": r.residual,
                        "fp_iterations": r.fp_iterations,
                    })
                })
                .collect();
            let doc = json!({
                "problem": problem.name,
                "h": traj.h,
                "initial_energy": traj.initial_energy,
                "records": records,
            });
            let mut text = serde_json::to_string_pretty(&doc)?;
            text.push('\n');
            text
        }
    };
    std::fs::write(&args.out, text).with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!(
        "{}: {} records, max |H - H0| = {:.3e}",
        args.out.display(),
        traj.records.len(),
        traj.max_energy_error()
    );
    Ok(())
}

fn cmd_converge(args: ConvergeArgs) -> Result<()> {
    let problem = load_problem(&args.problem)?;
    let rule = QuadratureRule::new(args.nodes.into(), args.k)?;
    let cfg = MethodConfig::new(args.method.into(), rule);
    let h_list = parse_h_list(&args.h_list)?;
    for &h in &h_list {
        step_count(args.t_end, h).map_err(|e| anyhow!("{e} (converge needs whole-step grids)"))?;
    }
    let report = run_convergence(&problem, &cfg, &h_list, args.t_end)?;
    std::fs::write(&args.out, report.to_csv())
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!("{}: {} rows", args.out.display(), report.rows.len());
    Ok(())
}

fn cmd_drift(args: DriftArgs) -> Result<()> {
    let problem = load_problem(&args.problem)?;
    let configs = parse_configs(&args.configs)?;
    let series = run_drift(&problem, &configs, args.h, args.t_end);
    for s in &series {
        if let Some(f) = &s.failure {
            eprintln!("warning: series '{}' failed: {f}", s.label);
        } else {
            eprintln!("{}: max |H - H0| = {:.3e}", s.label, s.max_drift());
        }
    }
    std::fs::write(&args.out, drift_to_csv(&series))
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn cmd_quadrature(args: QuadratureArgs) -> Result<()> {
    let rule = QuadratureRule::new(args.family.into(), args.k)?;
    let doc = json!({
        "family": rule.family().to_string(),
        "k": rule.len(),
        "nodes": rule.nodes(),
        "weights": rule.weights(),
        "degree_of_precision": rule.degree_of_precision(),
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

/// Built-in name, or a JSON file describing a polynomial problem:
/// `{"name": ..., "dof": m, "terms": [{"coefficient": c, "exponents":
/// [e_1..e_2m]}, ...], "y0": [..2m]}`.
fn load_problem(spec: &str) -> Result<ProblemSpec> {
    if let Ok(p) = problems::by_name(spec) {
        return Ok(p);
    }
    let path = PathBuf::from(spec);
    if !path.exists() {
        bail!("'{spec}' is neither a built-in problem (pendulum3, fhp6, kepler, sho) nor a file");
    }
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let doc: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let name = doc
        .get("name")
        .and_then(|v| v.as_str())
        .unwrap_or("custom")
        .to_string();
    let dof = doc
        .get("dof")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| anyhow!("problem file needs a positive integer 'dof'"))?
        as usize;
    let terms = doc
        .get("terms")
        .and_then(|v| v.as_array())
        .ok_or_else(|| anyhow!("problem file needs a 'terms' array"))?
        .iter()
        .map(|t| {
            let coefficient = t
                .get("coefficient")
                .and_then(|v| v.as_f64())
                .ok_or_else(|| anyhow!("term needs a numeric 'coefficient'"))?;
            let exponents = t
                .get("exponents")
                .and_then(|v| v.as_array())
                .ok_or_else(|| anyhow!("term needs an 'exponents' array"))?
                .iter()
                .map(|e| {
                    e.as_u64()
                        .map(|x| x as u32)
                        .ok_or_else(|| anyhow!("exponents must be nonnegative integers"))
                })
                .collect::<Result<Vec<u32>>>()?;
            Ok(Term::new(coefficient, exponents))
        })
        .collect::<Result<Vec<Term>>>()?;
    let y0 = doc
        .get("y0")
        .and_then(|v| v.as_array())
        .ok_or_else(|| anyhow!("problem file needs a 'y0' array"))?
        .iter()
        .map(|v| v.as_f64().ok_or_else(|| anyhow!("y0 must be numeric")))
        .collect::<Result<Vec<f64>>>()?;
    let hamiltonian = PolynomialHamiltonian::new(dof, terms)?;
    let t_end = doc.get("t_end").and_then(|v| v.as_f64()).unwrap_or(10.0);
    Ok(ProblemSpec::new(
        name,
        std::sync::Arc::new(hamiltonian),
        StateVector::new(y0)?,
        t_end,
    ))
}

/// `2^-1..2^-8` (inclusive, descending powers of two) or a comma list of
/// plain stepsizes.
fn parse_h_list(text: &str) -> Result<Vec<f64>> {
    if let Some((from, to)) = text.split_once("..") {
        let parse_pow = |s: &str| -> Result<i32> {
            let rest = s
                .trim()
                .strip_prefix("2^")
                .ok_or_else(|| anyhow!("power range must look like 2^-1..2^-8"))?;
            i32::from_str(rest).map_err(|_| anyhow!("bad exponent in '{s}'"))
        };
        let (a, b) = (parse_pow(from)?, parse_pow(to)?);
        if a < b {
            bail!("power range must descend, e.g. 2^-1..2^-8");
        }
        return Ok((b..=a).rev().map(|e| 2.0_f64.powi(e)).collect());
    }
    let list = text
        .split(',')
        .map(|s| f64::from_str(s.trim()).map_err(|_| anyhow!("bad stepsize '{s}'")))
        .collect::<Result<Vec<f64>>>()?;
    if list.is_empty() || list.iter().any(|h| *h <= 0.0) {
        bail!("stepsizes must be positive");
    }
    Ok(list)
}

/// `method:family:k[:dc]` entries separated by commas.
fn parse_configs(text: &str) -> Result<Vec<(String, MethodConfig)>> {
    text.split(',')
        .map(|entry| {
            let parts: Vec<&str> = entry.trim().split(':').collect();
            if parts.len() != 3 && parts.len() != 4 {
                bail!("config '{entry}' must be method:family:k[:dc]");
            }
            let kind = match parts[0] {
                "mk" => MethodKind::TwoStepCorrected,
                "mk-lin" => MethodKind::TwoStepLinear,
                "trap" => MethodKind::Trapezoidal,
                other => bail!("unknown method '{other}' (mk, mk-lin or trap)"),
            };
            let family = NodeFamily::from_str(parts[1])?;
            let k =
                usize::from_str(parts[2]).map_err(|_| anyhow!("bad node count in '{entry}'"))?;
            let mut cfg = MethodConfig::new(kind, QuadratureRule::new(family, k)?);
            match parts.get(3) {
                Some(&"dc") => cfg.drift_correct = true,
                Some(other) => bail!("unknown config flag '{other}' (only dc)"),
                None => {}
            }
            Ok((entry.trim().to_string(), cfg))
        })
        .collect()
}
