//! One-step integrators on the unit sphere and the trajectory driver.
//!
//! | method | update |
//! |---|---|
//! | SFE | `pⁿ⁺¹ = exp_{pⁿ}(h f(pⁿ))` |
//! | SBE | `s = f(pⁿ⁺¹)`, `pⁿ = exp_{pⁿ⁺¹}(-h s)` |
//! | PBE | `s = f(q/|q|)`, `pⁿ = q - h s`, `pⁿ⁺¹ = q/|q|` |
//! | SCN | `p* = SLERP(pⁿ, pⁿ⁺¹, 1/2)`, `s = f(p*)`, `pⁿ = exp_{p*}(-h s/2)` |
//!
//! Every method lands on the sphere through its own exponential map or
//! projection. The implicit ones solve a small nonlinear system by Newton's
//! method; see [`systems`] for the residuals and Jacobians.

pub mod systems;
mod trajectory;

use std::fmt;
use std::str::FromStr;

pub use trajectory::{integrate, integrate_with, IntegrateOptions, RetryEvent, Trajectory};

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::geometry::{exp_map_raw, guarded_norm, project, slerp_midpoint, UnitPoint3, Vec3};
use crate::newton::{newton_solve, NewtonConfig, NewtonStats};
use crate::par::{self, Execution};
use systems::{pack, unpack};

/// `cos(h|s|)` at or below this aborts a fixed-point step.
pub const COS_GUARD: f64 = 1e-8;
/// Relative margin below `π` for `h |s|` in the Crank-Nicolson steps.
pub const SCN_ANTIPODE_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MethodKind {
    Sfe,
    SbeFixedPoint,
    SbeNewton,
    Pbe3,
    Pbe6,
    Scn,
    ScnForward,
}

impl MethodKind {
    pub const ALL: [MethodKind; 7] = [
        MethodKind::Sfe,
        MethodKind::SbeFixedPoint,
        MethodKind::SbeNewton,
        MethodKind::Pbe3,
        MethodKind::Pbe6,
        MethodKind::Scn,
        MethodKind::ScnForward,
    ];

    pub fn key(self) -> &'static str {
        match self {
            MethodKind::Sfe => "sfe",
            MethodKind::SbeFixedPoint => "sbe-fixed-point",
            MethodKind::SbeNewton => "sbe",
            MethodKind::Pbe3 => "pbe-3",
            MethodKind::Pbe6 => "pbe",
            MethodKind::Scn => "scn",
            MethodKind::ScnForward => "scn-forward",
        }
    }

    pub fn is_implicit(self) -> bool {
        self != MethodKind::Sfe
    }

    pub fn order(self) -> u32 {
        match self {
            MethodKind::Scn | MethodKind::ScnForward => 2,
            _ => 1,
        }
    }
}

impl FromStr for MethodKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        let m = match key.as_str() {
            "sfe" => MethodKind::Sfe,
            "sbe-fixed-point" | "sbe-fp" => MethodKind::SbeFixedPoint,
            "sbe" | "sbe-newton" => MethodKind::SbeNewton,
            "pbe-3" | "pbe3" => MethodKind::Pbe3,
            "pbe" | "pbe-6" | "pbe6" => MethodKind::Pbe6,
            "scn" => MethodKind::Scn,
            "scn-forward" | "scn-fwd" => MethodKind::ScnForward,
            _ => return Err(Error::UnknownMethod(s.into())),
        };
        Ok(m)
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Outcome of a single step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepResult {
    pub next_state: UnitPoint3,
    /// Geodesic midpoint `p*` (Crank-Nicolson steps only).
    pub midpoint: Option<UnitPoint3>,
    /// Converged velocity `s`.
    pub velocity: Vec3,
    pub newton: Option<NewtonStats>,
    /// `| |raw| - 1 |` of the method's own output before it is wrapped as a
    /// [`UnitPoint3`].
    pub norm_defect: f64,
}

impl StepResult {
    pub fn newton_iterations(&self) -> Option<usize> {
        self.newton.map(|s| s.iterations)
    }
}

fn check_step(h: f64) -> Result<()> {
    if !h.is_finite() || h == 0.0 {
        return Err(Error::InvalidInput(format!(
            "step size {h} must be finite and non-zero"
        )));
    }
    Ok(())
}

fn wrap(raw: Vec3) -> Result<(UnitPoint3, f64)> {
    let defect = (raw.norm() - 1.0).abs();
    Ok((project(raw)?, defect))
}

fn normalize_position(x: [f64; 6]) -> Result<[f64; 6]> {
    let (s, q) = unpack(&x);
    Ok(pack(s, project(q)?.vec()))
}

/// Spherical forward Euler.
pub fn step_sfe<F: VectorField + ?Sized>(
    field: &F,
    p: UnitPoint3,
    t: f64,
    h: f64,
    cfg: &NewtonConfig,
) -> Result<StepResult> {
    check_step(h)?;
    let s = field.eval(p.vec(), t)?;
    let (next_state, norm_defect) = wrap(exp_map_raw(p.vec(), s, h, cfg.velocity_norm_guard))?;
    Ok(StepResult {
        next_state,
        midpoint: None,
        velocity: s,
        newton: None,
        norm_defect,
    })
}

/// Spherical backward Euler by projected fixed-point iteration. The
/// returned stats report the last position update as the residual.
pub fn step_sbe_fixed_point<F: VectorField + ?Sized>(
    field: &F,
    p: UnitPoint3,
    t: f64,
    h: f64,
    cfg: &NewtonConfig,
) -> Result<StepResult> {
    check_step(h)?;
    cfg.validate()?;
    let base = p.vec();
    let mut q = step_sfe(field, p, t, h, cfg)?.next_state.vec();
    let mut stats = NewtonStats::default();
    loop {
        let s = field.eval(q, t + h)?;
        let n = guarded_norm(s, cfg.velocity_norm_guard);
        let (sin, cos) = (h * n).sin_cos();
        if cos <= COS_GUARD {
            return Err(Error::StepTooLarge(format!(
                "cos(h|s|) = {cos:e} in fixed-point backward Euler"
            )));
        }
        let half = (base + s * (sin / n)) / cos;
        let next = project(half)?;
        stats.iterations += 1;
        stats.final_residual_norm = (next.vec() - q).max_abs();
        q = next.vec();
        if stats.final_residual_norm <= cfg.step_tol {
            stats.converged = true;
            return Ok(StepResult {
                next_state: next,
                midpoint: None,
                velocity: s,
                newton: Some(stats),
                norm_defect: (half.norm() - 1.0).abs(),
            });
        }
        if stats.iterations >= cfg.max_iters || !stats.final_residual_norm.is_finite() {
            return Err(Error::NonConvergence { stats });
        }
    }
}

/// Spherical backward Euler by projected Newton on the 6-dimensional
/// system, started from the forward Euler point.
pub fn step_sbe_newton<F: VectorField + ?Sized>(
    field: &F,
    p: UnitPoint3,
    t: f64,
    h: f64,
    cfg: &NewtonConfig,
) -> Result<StepResult> {
    check_step(h)?;
    let base = p.vec();
    let guard = cfg.velocity_norm_guard;
    let q0 = step_sfe(field, p, t, h, cfg)?.next_state.vec();
    let s0 = field.eval(q0, t + h)?;
    let (x, stats) = newton_solve(
        |x| systems::sbe_residual(field, base, t, h, guard, x),
        |x| systems::sbe_jacobian(field, t, h, guard, x),
        pack(s0, q0),
        normalize_position,
        cfg,
    )?;
    let (s, q) = unpack(&x);
    let (next_state, norm_defect) = wrap(q)?;
    Ok(StepResult {
        next_state,
        midpoint: None,
        velocity: s,
        newton: Some(stats),
        norm_defect,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PbeForm {
    /// Newton on `q` alone with `D = I - h G`.
    Reduced3,
    /// Newton on `(s, q)`, projecting `q` after every update.
    Embedded6,
}

/// Projected backward Euler: solve `s = g(q/|q|)`, `pⁿ = q - h s`, then
/// `pⁿ⁺¹ = q/|q|`.
pub fn step_pbe<F: VectorField + ?Sized>(
    field: &F,
    p: UnitPoint3,
    t: f64,
    h: f64,
    cfg: &NewtonConfig,
    form: PbeForm,
) -> Result<StepResult> {
    check_step(h)?;
    let base = p.vec();
    let q0 = step_sfe(field, p, t, h, cfg)?.next_state.vec();
    let (q, stats) = match form {
        PbeForm::Reduced3 => {
            let (x, stats) = newton_solve(
                |x| systems::pbe3_residual(field, base, t, h, x),
                |x| systems::pbe3_jacobian(field, t, h, x),
                q0.to_array(),
                |x: [f64; 3]| {
                    if Vec3::from(x).norm() == 0.0 {
                        Err(Error::ZeroVector)
                    } else {
                        Ok(x)
                    }
                },
                cfg,
            )?;
            (Vec3::from(x), stats)
        }
        PbeForm::Embedded6 => {
            let s0 = field.eval(q0, t + h)?;
            let (x, stats) = newton_solve(
                |x| systems::pbe6_residual(field, base, t, h, x),
                |x| systems::pbe6_jacobian(field, t, h, x),
                pack(s0, q0),
                normalize_position,
                cfg,
            )?;
            (unpack(&x).1, stats)
        }
    };
    let next = project(q)?;
    let velocity = field.eval(next.vec(), t + h)?;
    let (next_state, norm_defect) = wrap(next.vec())?;
    Ok(StepResult {
        next_state,
        midpoint: None,
        velocity,
        newton: Some(stats),
        norm_defect,
    })
}

#[derive(Clone, Copy)]
enum ScnTrace {
    Backward,
    Forward,
}

fn scn_impl<F: VectorField + ?Sized>(
    field: &F,
    p: UnitPoint3,
    t: f64,
    h: f64,
    cfg: &NewtonConfig,
    trace: ScnTrace,
) -> Result<StepResult> {
    check_step(h)?;
    let base = p.vec();
    let guard = cfg.velocity_norm_guard;
    let q0 = step_sbe_newton(field, p, t, h, cfg)?.next_state.vec();
    let m0 = slerp_midpoint(base, q0)
        .map_err(|e| Error::StepTooLarge(format!("initial midpoint undefined: {e}")))?;
    let s0 = field.eval(m0, t + 0.5 * h)?;
    let sweep = h.abs() * s0.norm();
    if sweep >= std::f64::consts::PI * (1.0 - SCN_ANTIPODE_MARGIN) {
        return Err(Error::StepTooLarge(format!(
            "h|s| = {sweep} reaches the antipode"
        )));
    }
    let map_antipode = |e: Error| match e {
        Error::Antipodal { dot } => Error::StepTooLarge(format!(
            "iterate antipodal to the takeoff point (dot {dot})"
        )),
        e => e,
    };
    let (x, stats) = match trace {
        ScnTrace::Backward => newton_solve(
            |x| systems::scn_residual(field, base, t, h, guard, x),
            |x| systems::scn_jacobian(field, base, t, h, guard, x),
            pack(s0, q0),
            normalize_position,
            cfg,
        ),
        ScnTrace::Forward => newton_solve(
            |x| systems::scn_forward_residual(field, base, t, h, guard, x),
            |x| systems::scn_forward_jacobian(field, base, t, h, guard, x),
            pack(s0, q0),
            normalize_position,
            cfg,
        ),
    }
    .map_err(map_antipode)?;
    let (s, q) = unpack(&x);
    let midpoint = project(slerp_midpoint(base, q).map_err(map_antipode)?)?;
    let (next_state, norm_defect) = wrap(q)?;
    Ok(StepResult {
        next_state,
        midpoint: Some(midpoint),
        velocity: s,
        newton: Some(stats),
        norm_defect,
    })
}

/// Spherical Crank-Nicolson, started from the backward Euler solution.
/// Accepts negative `h` (time reversal).
pub fn step_scn<F: VectorField + ?Sized>(
    field: &F,
    p: UnitPoint3,
    t: f64,
    h: f64,
    cfg: &NewtonConfig,
) -> Result<StepResult> {
    scn_impl(field, p, t, h, cfg, ScnTrace::Backward)
}

/// Crank-Nicolson variant closing the step with `q = exp_{p*}(h s/2)`.
pub fn step_scn_forward<F: VectorField + ?Sized>(
    field: &F,
    p: UnitPoint3,
    t: f64,
    h: f64,
    cfg: &NewtonConfig,
) -> Result<StepResult> {
    scn_impl(field, p, t, h, cfg, ScnTrace::Forward)
}

pub fn step<F: VectorField + ?Sized>(
    method: MethodKind,
    field: &F,
    p: UnitPoint3,
    t: f64,
    h: f64,
    cfg: &NewtonConfig,
) -> Result<StepResult> {
    match method {
        MethodKind::Sfe => step_sfe(field, p, t, h, cfg),
        MethodKind::SbeFixedPoint => step_sbe_fixed_point(field, p, t, h, cfg),
        MethodKind::SbeNewton => step_sbe_newton(field, p, t, h, cfg),
        MethodKind::Pbe3 => step_pbe(field, p, t, h, cfg, PbeForm::Reduced3),
        MethodKind::Pbe6 => step_pbe(field, p, t, h, cfg, PbeForm::Embedded6),
        MethodKind::Scn => step_scn(field, p, t, h, cfg),
        MethodKind::ScnForward => step_scn_forward(field, p, t, h, cfg),
    }
}

/// One step from each of `states`, data-parallel under
/// [`Execution::Parallel`].
pub fn step_batch<F: VectorField + ?Sized>(
    method: MethodKind,
    field: &F,
    states: &[UnitPoint3],
    t: f64,
    h: f64,
    cfg: &NewtonConfig,
    exec: Execution,
) -> Vec<Result<StepResult>> {
    par::map(exec, states, |p| step(method, field, *p, t, h, cfg))
}

/// Residual of the naive backward Euler relation `pⁿ = q - h s` measured as
/// `|q - h s|² - 1`; equals `h²|s|²` whenever `q` is unit and `s ⟂ q`, so
/// no unit `pⁿ` is reachable for `h |s| > 0`.
pub fn naive_backward_euler_excess(q: UnitPoint3, s: Vec3, h: f64) -> f64 {
    (q.vec() - s * h).norm_squared() - 1.0
}
