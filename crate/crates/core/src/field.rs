//! Tangent vector fields `f(p, t)` on the sphere.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::linalg::Mat3;

/// A tangent vector field defined by an ambient formula on (a neighborhood
/// of) the sphere.
///
/// Implementations must be free of side effects: integrators and sweeps
/// evaluate fields from several threads at once.
pub trait VectorField: Send + Sync {
    fn name(&self) -> &str;

    fn eval(&self, p: Vec3, t: f64) -> Result<Vec3>;

    /// Ambient Jacobian `∂f_i/∂p_j`. Falls back to central differences.
    fn jacobian(&self, p: Vec3, t: f64) -> Result<Mat3> {
        jacobian_fd(self, p, t)
    }

    fn has_analytic_jacobian(&self) -> bool {
        false
    }

    /// Conserved observable (Hamiltonian), if the flow has one.
    fn hamiltonian(&self, _p: Vec3) -> Option<f64> {
        None
    }
}

/// Central-difference Jacobian with step `ε^{1/3} max(1, |p|)`.
pub fn jacobian_fd<F: VectorField + ?Sized>(field: &F, p: Vec3, t: f64) -> Result<Mat3> {
    let delta = f64::EPSILON.cbrt() * p.norm().max(1.0);
    let mut jac = Mat3::zeros();
    for j in 0..3 {
        let mut e = [0.0; 3];
        e[j] = delta;
        let e = Vec3::from(e);
        let fwd = field.eval(p + e, t)?;
        let bwd = field.eval(p - e, t)?;
        let col = (fwd - bwd) / (2.0 * delta);
        for i in 0..3 {
            jac[(i, j)] = col[i];
        }
    }
    Ok(jac)
}

type EvalFn = dyn Fn(Vec3, f64) -> Result<Vec3> + Send + Sync;
type JacFn = dyn Fn(Vec3, f64) -> Result<Mat3> + Send + Sync;
type ObsFn = dyn Fn(Vec3) -> f64 + Send + Sync;

/// Closure-backed field: an evaluator with an optional analytic Jacobian and
/// an optional conserved observable.
#[derive(Clone)]
pub struct FieldSpec {
    name: String,
    evaluate: Arc<EvalFn>,
    analytic_jacobian: Option<Arc<JacFn>>,
    observable: Option<Arc<ObsFn>>,
}

impl FieldSpec {
    pub fn new(
        name: impl Into<String>,
        evaluate: impl Fn(Vec3, f64) -> Result<Vec3> + Send + Sync + 'static,
    ) -> Self {
        FieldSpec {
            name: name.into(),
            evaluate: Arc::new(evaluate),
            analytic_jacobian: None,
            observable: None,
        }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(Vec3, f64) -> Result<Mat3> + Send + Sync + 'static,
    ) -> Self {
        self.analytic_jacobian = Some(Arc::new(jac));
        self
    }

    pub fn with_observable(mut self, obs: impl Fn(Vec3) -> f64 + Send + Sync + 'static) -> Self {
        self.observable = Some(Arc::new(obs));
        self
    }
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("name", &self.name)
            .field("analytic_jacobian", &self.analytic_jacobian.is_some())
            .field("observable", &self.observable.is_some())
            .finish()
    }
}

impl VectorField for FieldSpec {
    fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, p: Vec3, t: f64) -> Result<Vec3> {
        (self.evaluate)(p, t)
    }

    fn jacobian(&self, p: Vec3, t: f64) -> Result<Mat3> {
        match &self.analytic_jacobian {
            Some(j) => j(p, t),
            None => jacobian_fd(self, p, t),
        }
    }

    fn has_analytic_jacobian(&self) -> bool {
        self.analytic_jacobian.is_some()
    }

    fn hamiltonian(&self, p: Vec3) -> Option<f64> {
        self.observable.as_ref().map(|h| h(p))
    }
}

impl<F: VectorField + ?Sized> VectorField for Arc<F> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn eval(&self, p: Vec3, t: f64) -> Result<Vec3> {
        (**self).eval(p, t)
    }
    fn jacobian(&self, p: Vec3, t: f64) -> Result<Mat3> {
        (**self).jacobian(p, t)
    }
    fn has_analytic_jacobian(&self) -> bool {
        (**self).has_analytic_jacobian()
    }
    fn hamiltonian(&self, p: Vec3) -> Option<f64> {
        (**self).hamiltonian(p)
    }
}

impl<F: VectorField + ?Sized> VectorField for Box<F> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn eval(&self, p: Vec3, t: f64) -> Result<Vec3> {
        (**self).eval(p, t)
    }
    fn jacobian(&self, p: Vec3, t: f64) -> Result<Mat3> {
        (**self).jacobian(p, t)
    }
    fn has_analytic_jacobian(&self) -> bool {
        (**self).has_analytic_jacobian()
    }
    fn hamiltonian(&self, p: Vec3) -> Option<f64> {
        (**self).hamiltonian(p)
    }
}

/// Rigid rotation `f(p) = ω × p`; every orbit is a circle traversed at
/// constant speed, a great circle when the start is orthogonal to `ω`.
pub fn rotation_field(omega: Vec3) -> FieldSpec {
    FieldSpec::new("rotation", move |p, _| Ok(omega.cross(p)))
        .with_jacobian(move |_, _| Ok(Mat3::skew(omega)))
}

/// `f(p) = M p` (not tangent in general; used to check Jacobians).
pub fn linear_field(m: Mat3) -> FieldSpec {
    FieldSpec::new("linear", move |p, _| Ok(m.apply(p))).with_jacobian(move |_, _| Ok(m))
}

pub fn zero_field() -> FieldSpec {
    FieldSpec::new("zero", |_, _| Ok(Vec3::ZERO)).with_jacobian(|_, _| Ok(Mat3::zeros()))
}

pub(crate) fn require_finite(name: &str, v: Vec3) -> Result<Vec3> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidInput(format!(
            "field `{name}` produced a non-finite value"
        )))
    }
}
