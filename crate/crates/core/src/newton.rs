//! Plain (undamped) Newton iteration with an optional projection hook.

use crate::error::{Error, Result};
use crate::linalg::{inf_norm, solve_linear, Matrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonConfig {
    /// Stop once `|r(x)|_inf <= residual_tol`.
    pub residual_tol: f64,
    /// Stop once the last update satisfies `|x_{k+1} - x_k|_inf <= step_tol`.
    pub step_tol: f64,
    pub max_iters: usize,
    /// Lower bound substituted for velocity norms in denominators.
    pub velocity_norm_guard: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            residual_tol: 1e-12,
            step_tol: 1e-13,
            max_iters: 25,
            velocity_norm_guard: f64::EPSILON,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.residual_tol)
            || !positive(self.step_tol)
            || !positive(self.velocity_norm_guard)
            || self.max_iters == 0
        {
            return Err(Error::InvalidInput(format!(
                "invalid newton configuration {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NewtonStats {
    pub iterations: usize,
    pub final_residual_norm: f64,
    pub converged: bool,
}

/// Solve `r(x) = 0` from `x0`.
///
/// Each iteration takes the full Newton update `x - J(x)^{-1} r(x)` and passes
/// it through `project`. The first iterate meeting either stopping rule is
/// returned together with its statistics; exhausting `max_iters` yields
/// [`Error::NonConvergence`].
pub fn newton_solve<const N: usize, R, J, P>(
    mut residual: R,
    mut jacobian: J,
    x0: [f64; N],
    mut project: P,
    cfg: &NewtonConfig,
) -> Result<([f64; N], NewtonStats)>
where
    R: FnMut(&[f64; N]) -> Result<[f64; N]>,
    J: FnMut(&[f64; N]) -> Result<Matrix<N>>,
    P: FnMut([f64; N]) -> Result<[f64; N]>,
{
    cfg.validate()?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "non-finite newton initial guess".into(),
        ));
    }
    let mut x = x0;
    let mut r = residual(&x)?;
    let mut stats = NewtonStats {
        iterations: 0,
        final_residual_norm: inf_norm(&r),
        converged: false,
    };

    loop {
        if stats.final_residual_norm <= cfg.residual_tol {
            stats.converged = true;
            return Ok((x, stats));
        }
        if stats.iterations >= cfg.max_iters {
            return Err(Error::NonConvergence { stats });
        }

        let delta = solve_linear(&jacobian(&x)?, &r)?;
        let mut next = x;
        for (xi, di) in next.iter_mut().zip(&delta) {
            *xi -= di;
        }
        let next = project(next)?;
        let step = next
            .iter()
            .zip(&x)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));

        x = next;
        r = residual(&x)?;
        stats.iterations += 1;
        stats.final_residual_norm = inf_norm(&r);
        if !stats.final_residual_norm.is_finite() {
            return Err(Error::NonConvergence { stats });
        }
        if step <= cfg.step_tol {
            stats.converged = true;
            return Ok((x, stats));
        }
    }
}
