//! `sphere-ivp`: run the convergence, stability and energy-drift studies and
//! write their CSV output.
//!
//! Exits 0 when every run succeeds untainted and 1 otherwise (including bad
//! arguments).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sphere_ivp::experiments::csv::{
    convergence_csv, hamiltonian_summary_csv, stability_csv, trajectory_csv, write_file,
};
use sphere_ivp::experiments::{
    random_start, run_convergence, run_hamiltonian, run_stability, ConvergenceConfig,
    HamiltonianConfig, Harness, ReferencePolicy, StabilityConfig,
};
use sphere_ivp::geometry::{project, UnitPoint3, Vec3};
use sphere_ivp::integrators::MethodKind;
use sphere_ivp::par::Execution;
use sphere_ivp::problems::Problem;

#[derive(Parser, Debug)]
#[command(
    name = "sphere-ivp",
    version,
    about = "Geometric integrators on the unit sphere: experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    experiment: Experiment,
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// Final-time error against a reference and least-squares order fit.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Reference solution.
        #[arg(long, value_enum, default_value_t = Reference::FineScn)]
        reference: Reference,
        /// Rotation vector for `--reference exact-rotation`.
        #[arg(long, value_parser = parse_vec3, default_value = "0,0,1")]
        omega: Vec3,
    },
    /// Long runs on the stiff attractor with a convergence verdict per run.
    Stability {
        #[command(flatten)]
        common: Common,
        /// Draw the start point at random from this seed (ignored with --p0).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Relative energy error and return to the start on Hamiltonian flows.
    Hamiltonian {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Methods, comma separated (sfe, sbe, sbe-fixed-point, pbe, pbe-3, scn, scn-forward).
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    method: Vec<MethodKind>,
    /// Problem key (four-vortex, stiff-attractor, rigid-body, perturbed-top).
    #[arg(long, value_parser = parse_problem)]
    problem: Option<Problem>,
    /// Step sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    h: Vec<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Start point `x,y,z`, normalized onto the sphere.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    p0: Option<Vec3>,
    /// Step halvings allowed when a Newton solve fails.
    #[arg(long, default_value_t = 2)]
    max_halvings: u32,
    /// Run the sweep on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Reference {
    FineScn,
    ExactRotation,
}

fn parse_method(s: &str) -> std::result::Result<MethodKind, String> {
    s.parse().map_err(|e: sphere_ivp::Error| e.to_string())
}

fn parse_problem(s: &str) -> std::result::Result<Problem, String> {
    s.parse().map_err(|e: sphere_ivp::Error| e.to_string())
}

fn parse_vec3(s: &str) -> std::result::Result<Vec3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected three comma-separated numbers, got {s:?}")),
    }
}

impl Common {
    fn harness(&self) -> Harness {
        Harness {
            max_halvings: self.max_halvings,
            execution: if self.sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            },
            ..Default::default()
        }
    }

    fn start(&self, default: UnitPoint3) -> Result<UnitPoint3> {
        match self.p0 {
            Some(v) => project(v).context("--p0 must be a nonzero vector"),
            None => Ok(default),
        }
    }

    fn override_list<T: Clone>(given: &[T], default: Vec<T>) -> Vec<T> {
        if given.is_empty() {
            default
        } else {
            given.to_vec()
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// `dir/stem-method-h<h>.csv` next to the summary file.
fn run_path(summary: &Path, method: MethodKind, h: f64) -> PathBuf {
    let stem = summary
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("run");
    summary.with_file_name(format!("{stem}-{}-h{h}.csv", method.key()))
}

/// Returns whether any run was tainted.
fn run(cli: Cli) -> Result<bool> {
    match cli.experiment {
        Experiment::Convergence {
            common,
            reference,
            omega,
        } => {
            let base = ConvergenceConfig::default();
            let problem = common.problem.unwrap_or(base.problem);
            let default_p0 = if common.problem.is_some() {
                UnitPoint3::try_from_vec(problem.default_start())?
            } else {
                base.p0
            };
            let cfg = ConvergenceConfig {
                problem,
                methods: Common::override_list(&common.method, base.methods),
                h_values: Common::override_list(&common.h, base.h_values),
                t_final: common.t_final.unwrap_or(base.t_final),
                p0: common.start(default_p0)?,
                reference: match reference {
                    Reference::FineScn => ReferencePolicy::FineScn,
                    Reference::ExactRotation => ReferencePolicy::ExactRotation { omega },
                },
                harness: common.harness(),
            };
            let report = run_convergence(&cfg)?;
            for s in &report.series {
                eprintln!(
                    "{:<16} slope {:.4}  residual {:.2e}{}",
                    s.method.key(),
                    s.fit.slope,
                    s.fit.residual,
                    if s.tainted { "  tainted" } else { "" }
                );
            }
            if let Some(gap) = report.richardson_gap {
                let verdict = if report.richardson_ok {
                    "ok"
                } else {
                    "too large, tainted"
                };
                eprintln!("reference gap {gap:.2e} ({verdict})");
            }
            emit(common.out.as_deref(), &convergence_csv(&report))?;
            Ok(report.tainted())
        }
        Experiment::Stability { common, seed } => {
            if let Some(p) = common.problem {
                if p != Problem::StiffAttractor {
                    bail!("the stability study runs on stiff-attractor only, got {p}");
                }
            }
            let base = StabilityConfig::default();
            let default_p0 = seed.map_or(base.p0, random_start);
            let cfg = StabilityConfig {
                methods: Common::override_list(&common.method, base.methods),
                h_values: Common::override_list(&common.h, base.h_values),
                t_final: common.t_final.unwrap_or(base.t_final),
                p0: common.start(default_p0)?,
                harness: common.harness(),
            };
            let runs = run_stability(&cfg)?;
            for r in &runs {
                eprintln!(
                    "{:<16} h = {:<6} {}{}",
                    r.method.key(),
                    r.h,
                    r.verdict,
                    if r.tainted() { "  tainted" } else { "" }
                );
            }
            emit(common.out.as_deref(), &stability_csv(&runs))?;
            Ok(runs.iter().any(|r| r.tainted()))
        }
        Experiment::Hamiltonian { common } => {
            let problem = common.problem.unwrap_or(Problem::RigidBody);
            let base = HamiltonianConfig::for_problem(problem);
            let cfg = HamiltonianConfig {
                methods: Common::override_list(&common.method, base.methods.clone()),
                h_values: Common::override_list(&common.h, base.h_values.clone()),
                t_final: common.t_final.unwrap_or(base.t_final),
                p0: common.start(base.p0)?,
                harness: common.harness(),
                ..base
            };
            let report = run_hamiltonian(&cfg)?;
            for r in &report.runs {
                let ret = r.section.map_or("no return".to_string(), |s| {
                    format!("return {:.2e}", s.distance)
                });
                eprintln!(
                    "{:<16} h = {:<6} max drift {:.3e}  {ret}{}",
                    r.method.key(),
                    r.h,
                    r.max_drift,
                    if r.tainted() { "  tainted" } else { "" }
                );
                if let Some(out) = &common.out {
                    write_file(
                        &run_path(out, r.method, r.h),
                        &trajectory_csv(&r.trajectory),
                    )?;
                }
            }
            emit(common.out.as_deref(), &hamiltonian_summary_csv(&report))?;
            Ok(report.tainted())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("some runs needed step subdivision; results are tainted");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}

/// The error chain, skipping causes already spelled out by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let text = cause.to_string();
        if !msg.contains(&text) {
            msg = format!("{msg}: {text}");
        }
    }
    msg
}
