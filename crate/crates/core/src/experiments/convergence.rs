use crate::error::{Error, Result};
use crate::field::{rotation_field, VectorField};
use crate::geometry::{UnitPoint3, Vec3};
use crate::integrators::MethodKind;
use crate::par;
use crate::problems::Problem;

use super::{check_sweep, sweep, Harness};

/// Where the "exact" final state comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferencePolicy {
    /// Crank-Nicolson with a step one hundred times finer than the smallest
    /// tested step, cross-checked against twice that step.
    FineScn,
    /// Rigid rotation `f(p) = ω × p` with its closed-form solution; the
    /// configured problem is ignored.
    ExactRotation { omega: Vec3 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceConfig {
    pub problem: Problem,
    pub methods: Vec<MethodKind>,
    pub h_values: Vec<f64>,
    pub t_final: f64,
    pub p0: UnitPoint3,
    pub reference: ReferencePolicy,
    pub harness: Harness,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            problem: Problem::FourVortex,
            methods: vec![
                MethodKind::Sfe,
                MethodKind::SbeNewton,
                MethodKind::Pbe6,
                MethodKind::Scn,
            ],
            h_values: vec![0.2, 0.1, 0.05, 0.025, 0.0125],
            t_final: 2.0,
            p0: UnitPoint3::try_from_vec(Problem::FourVortex.default_start())
                .expect("registry start is unit"),
            reference: ReferencePolicy::FineScn,
            harness: Harness::default(),
        }
    }
}

/// Least-squares line `log e = slope · log h + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the residuals in log space.
    pub residual: f64,
}

pub fn least_squares_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 2 {
        return Err(Error::InvalidInput(
            "a slope fit needs at least two points".into(),
        ));
    }
    if points
        .iter()
        .any(|&(h, e)| !(h > 0.0 && e > 0.0 && h.is_finite() && e.is_finite()))
    {
        return Err(Error::InvalidInput(format!(
            "log-log fit needs positive finite data, got {points:?}"
        )));
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(h, e)| (h.ln(), e.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all step sizes are equal".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = logs
        .iter()
        .map(|&(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    Ok(SlopeFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceSeries {
    pub method: MethodKind,
    /// `(h, E₂)` in the configured order.
    pub points: Vec<(f64, f64)>,
    pub fit: SlopeFit,
    pub tainted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub series: Vec<ConvergenceSeries>,
    pub reference: UnitPoint3,
    /// Step of the fine reference run, if one was used.
    pub reference_h: Option<f64>,
    /// `|p_ref(h_ref) - p_ref(2 h_ref)|`.
    pub richardson_gap: Option<f64>,
    /// Whether the reference gap is below `1e-3` times the smallest error.
    pub richardson_ok: bool,
}

impl ConvergenceReport {
    pub fn series(&self, method: MethodKind) -> Option<&ConvergenceSeries> {
        self.series.iter().find(|s| s.method == method)
    }

    pub fn tainted(&self) -> bool {
        !self.richardson_ok || self.series.iter().any(|s| s.tainted)
    }
}

/// Rotation of `p` about `omega` by the angle `|omega| t`.
fn rotate(p: Vec3, omega: Vec3, t: f64) -> Vec3 {
    let rate = omega.norm();
    if rate == 0.0 {
        return p;
    }
    let k = omega / rate;
    let (sin, cos) = (rate * t).sin_cos();
    p * cos + k.cross(p) * sin + k * (k.dot(p) * (1.0 - cos))
}

pub fn run_convergence(cfg: &ConvergenceConfig) -> Result<ConvergenceReport> {
    check_sweep(&cfg.methods, &cfg.h_values, cfg.t_final)?;
    if cfg.h_values.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "a convergence fit needs at least 4 step sizes, got {}",
            cfg.h_values.len()
        )));
    }
    let harness = &cfg.harness;
    let field: std::sync::Arc<dyn VectorField> = match cfg.reference {
        ReferencePolicy::FineScn => cfg.problem.field(),
        ReferencePolicy::ExactRotation { omega } => std::sync::Arc::new(rotation_field(omega)),
    };

    let (reference, reference_h, gap) = match cfg.reference {
        ReferencePolicy::FineScn => {
            let h_min = cfg.h_values.iter().copied().fold(f64::INFINITY, f64::min);
            let h_ref = h_min / 100.0;
            let runs = par::map(harness.execution, &[h_ref, 2.0 * h_ref], |&h| {
                harness
                    .integrate(MethodKind::Scn, field.as_ref(), cfg.p0, cfg.t_final, h)
                    .map(|t| t.final_state().expect("nonempty trajectory"))
            });
            let mut runs = runs.into_iter();
            let fine = runs.next().expect("two reference runs")?;
            let coarse = runs.next().expect("two reference runs")?;
            (fine, Some(h_ref), Some(fine.distance(coarse)))
        }
        ReferencePolicy::ExactRotation { omega } => {
            let exact = UnitPoint3::try_from_vec(rotate(cfg.p0.vec(), omega, cfg.t_final))?;
            (exact, None, None)
        }
    };

    let jobs = sweep(&cfg.methods, &cfg.h_values);
    let results = par::map(harness.execution, &jobs, |&(method, h)| {
        let traj = harness.integrate(method, field.as_ref(), cfg.p0, cfg.t_final, h)?;
        let err = traj
            .final_state()
            .expect("nonempty trajectory")
            .distance(reference);
        Ok::<_, Error>((err, traj.tainted()))
    });

    let mut series = Vec::with_capacity(cfg.methods.len());
    let mut results = results.into_iter();
    for &method in &cfg.methods {
        let mut points = Vec::with_capacity(cfg.h_values.len());
        let mut tainted = false;
        for &h in &cfg.h_values {
            let (err, t) = results.next().expect("one result per job")?;
            points.push((h, err));
            tainted |= t;
        }
        let fit = least_squares_slope(&points).map_err(|e| Error::RunFailed {
            method: method.key().into(),
            h: cfg.h_values[0],
            source: Box::new(e),
        })?;
        series.push(ConvergenceSeries {
            method,
            points,
            fit,
            tainted,
        });
    }

    let min_err = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .fold(f64::INFINITY, f64::min);
    let richardson_ok = gap.is_none_or(|g| g <= 1e-3 * min_err);
    Ok(ConvergenceReport {
        series,
        reference,
        reference_h,
        richardson_gap: gap,
        richardson_ok,
    })
}
