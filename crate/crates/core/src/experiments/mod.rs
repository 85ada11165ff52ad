//! Experiment harness: convergence order, stiff stability and energy drift
//! studies, with CSV output.
//!
//! Each study is a sweep over `(method, h)` pairs. Runs are independent and
//! are mapped through [`crate::par::map`], so results come back in sweep
//! order whatever the execution mode.

mod convergence;
pub mod csv;
mod hamiltonian;
mod stability;

pub use convergence::{
    least_squares_slope, run_convergence, ConvergenceConfig, ConvergenceReport, ConvergenceSeries,
    ReferencePolicy, SlopeFit,
};
pub use hamiltonian::{
    run_hamiltonian, section_return, HamiltonianConfig, HamiltonianReport, HamiltonianRun,
    SectionReturn,
};
pub use stability::{
    random_start, run_stability, stability_verdict, StabilityConfig, StabilityRun, Verdict,
    VERDICT_BAND, VERDICT_WINDOW,
};

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::geometry::UnitPoint3;
use crate::integrators::{integrate_with, IntegrateOptions, MethodKind, Trajectory};
use crate::newton::NewtonConfig;
use crate::par::Execution;

/// Settings shared by every study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Harness {
    pub newton: NewtonConfig,
    /// Halvings allowed for a step whose Newton solve fails. A run that
    /// needed any is reported as tainted.
    pub max_halvings: u32,
    pub execution: Execution,
}

impl Default for Harness {
    fn default() -> Self {
        Harness {
            newton: NewtonConfig::default(),
            max_halvings: 2,
            execution: Execution::default(),
        }
    }
}

impl Harness {
    fn options(&self) -> IntegrateOptions {
        IntegrateOptions {
            newton: self.newton,
            max_halvings: self.max_halvings,
        }
    }

    fn integrate(
        &self,
        method: MethodKind,
        field: &dyn VectorField,
        p0: UnitPoint3,
        t_final: f64,
        h: f64,
    ) -> Result<Trajectory> {
        integrate_with(method, field, p0, 0.0, t_final, h, &self.options()).map_err(|e| {
            Error::RunFailed {
                method: method.key().into(),
                h,
                source: Box::new(e),
            }
        })
    }
}

/// `methods × h_values` in method-major order.
pub(crate) fn sweep(methods: &[MethodKind], h_values: &[f64]) -> Vec<(MethodKind, f64)> {
    methods
        .iter()
        .flat_map(|&m| h_values.iter().map(move |&h| (m, h)))
        .collect()
}

pub(crate) fn check_sweep(methods: &[MethodKind], h_values: &[f64], t_final: f64) -> Result<()> {
    if methods.is_empty() {
        return Err(Error::InvalidInput("no methods given".into()));
    }
    if h_values.is_empty() || h_values.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(Error::InvalidInput(format!(
            "step sizes must be positive and finite, got {h_values:?}"
        )));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "t_final must be positive, got {t_final}"
        )));
    }
    Ok(())
}
