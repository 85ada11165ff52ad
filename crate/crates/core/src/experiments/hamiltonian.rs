use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::geometry::{UnitPoint3, Vec3};
use crate::integrators::{MethodKind, Trajectory};
use crate::par;
use crate::problems::{hamiltonian_trace, Problem};

use super::{check_sweep, sweep, Harness};

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianConfig {
    pub problem: Problem,
    pub methods: Vec<MethodKind>,
    pub h_values: Vec<f64>,
    pub t_final: f64,
    pub p0: UnitPoint3,
    pub harness: Harness,
}

impl HamiltonianConfig {
    /// Defaults for `problem`: `T = 500` for the rigid body, `T = 2500` for
    /// the perturbed top, start from the registry.
    pub fn for_problem(problem: Problem) -> Self {
        let t_final = match problem {
            Problem::PerturbedTop => 2500.0,
            _ => 500.0,
        };
        HamiltonianConfig {
            problem,
            methods: vec![MethodKind::SbeNewton, MethodKind::Scn],
            h_values: vec![0.1, 0.5, 1.0, 2.0],
            t_final,
            p0: UnitPoint3::try_from_vec(problem.default_start()).expect("registry start is unit"),
            harness: Harness::default(),
        }
    }
}

impl Default for HamiltonianConfig {
    fn default() -> Self {
        Self::for_problem(Problem::RigidBody)
    }
}

/// First-return data on the plane through `p0` orthogonal to `f(p0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectionReturn {
    /// Smallest distance from `p0` of a return crossing.
    pub distance: f64,
    /// Time of that crossing.
    pub time: f64,
    /// Time of the first return (period estimate).
    pub first_time: f64,
    pub crossings: usize,
}

fn hermite(p0: Vec3, f0: Vec3, p1: Vec3, f1: Vec3, dt: f64, tau: f64) -> Vec3 {
    let t2 = tau * tau;
    let t3 = t2 * tau;
    p0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + f0 * (dt * (t3 - 2.0 * t2 + tau))
        + p1 * (-2.0 * t3 + 3.0 * t2)
        + f1 * (dt * (t3 - t2))
}

/// Returns of a trajectory to its start through a Poincaré section.
///
/// The section is the plane through `p0` with normal `f(p0)`; a return is a
/// crossing in the same direction as the departure. Crossing points are
/// located on the cubic Hermite interpolant of consecutive states (using
/// `f` at both ends) and pulled back to the sphere. `None` when the start
/// is an equilibrium or nothing returns.
pub fn section_return<F: VectorField + ?Sized>(
    traj: &Trajectory,
    field: &F,
) -> Result<Option<SectionReturn>> {
    let (Some(first), Some(&t0)) = (traj.states.first(), traj.times.first()) else {
        return Ok(None);
    };
    let start = first.vec();
    let v0 = field.eval(start, t0)?;
    if v0.norm() == 0.0 {
        return Ok(None);
    }
    let normal = v0 / v0.norm();
    let side = |p: Vec3| normal.dot(p - start);

    let mut best: Option<SectionReturn> = None;
    let mut crossings = 0;
    let mut first_time = f64::NAN;
    for k in 1..traj.states.len().saturating_sub(1) {
        let (a, b) = (traj.states[k].vec(), traj.states[k + 1].vec());
        if !(side(a) < 0.0 && side(b) >= 0.0) {
            continue;
        }
        let (ta, tb) = (traj.times[k], traj.times[k + 1]);
        let dt = tb - ta;
        let (fa, fb) = (field.eval(a, ta)?, field.eval(b, tb)?);
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if side(hermite(a, fa, b, fb, dt, mid)) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let tau = 0.5 * (lo + hi);
        let hit = hermite(a, fa, b, fb, dt, tau);
        let distance = (hit / hit.norm() - start).norm();
        let time = ta + tau * dt;
        crossings += 1;
        if crossings == 1 {
            first_time = time;
        }
        if best.is_none_or(|b| distance < b.distance) {
            best = Some(SectionReturn {
                distance,
                time,
                first_time,
                crossings: 0,
            });
        }
    }
    Ok(best.map(|b| SectionReturn {
        crossings,
        first_time,
        ..b
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianRun {
    pub method: MethodKind,
    pub h: f64,
    pub trajectory: Trajectory,
    /// Relative Hamiltonian error at every state.
    pub drift: Vec<f64>,
    pub max_drift: f64,
    pub final_drift: f64,
    pub section: Option<SectionReturn>,
}

impl HamiltonianRun {
    pub fn tainted(&self) -> bool {
        self.trajectory.tainted()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianReport {
    pub problem: Problem,
    pub runs: Vec<HamiltonianRun>,
}

impl HamiltonianReport {
    pub fn tainted(&self) -> bool {
        self.runs.iter().any(|r| r.tainted())
    }

    pub fn run(&self, method: MethodKind, h: f64) -> Option<&HamiltonianRun> {
        self.runs.iter().find(|r| r.method == method && r.h == h)
    }
}

pub fn run_hamiltonian(cfg: &HamiltonianConfig) -> Result<HamiltonianReport> {
    check_sweep(&cfg.methods, &cfg.h_values, cfg.t_final)?;
    let field = cfg.problem.field();
    if field.hamiltonian(cfg.p0.vec()).is_none() {
        return Err(Error::MissingObservable(cfg.problem.key().into()));
    }
    let harness = &cfg.harness;
    let jobs = sweep(&cfg.methods, &cfg.h_values);
    let runs = par::map(harness.execution, &jobs, |&(method, h)| {
        let trajectory = harness.integrate(method, field.as_ref(), cfg.p0, cfg.t_final, h)?;
        let drift = hamiltonian_trace(&trajectory, field.as_ref())?;
        let section = section_return(&trajectory, field.as_ref())?;
        Ok(HamiltonianRun {
            method,
            h,
            max_drift: drift.iter().copied().fold(0.0, f64::max),
            final_drift: drift.last().copied().unwrap_or(0.0),
            drift,
            section,
            trajectory,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(HamiltonianReport {
        problem: cfg.problem,
        runs,
    })
}
