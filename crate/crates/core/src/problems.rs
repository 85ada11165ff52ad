//! Benchmark vector fields: four stationary point vortices, a stiff
//! attractor, the free rigid body and a perturbed spinning top.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{require_finite, VectorField};
use crate::geometry::Vec3;
use crate::integrators::Trajectory;
use crate::linalg::Mat3;

/// Minimum admissible `1 - x_i.x` before a vortex center counts as hit.
pub const VORTEX_GUARD: f64 = 1e-12;

/// Velocity induced by four fixed point vortices,
/// `f(x) = Σ (x_i × x) / (2 (1 - x_i.x))`.
#[derive(Clone, Debug)]
pub struct FourVortex {
    centers: [Vec3; 4],
}

impl Default for FourVortex {
    fn default() -> Self {
        let s3 = 3f64.sqrt();
        let s5 = 5f64.sqrt();
        let s2 = 2f64.sqrt();
        FourVortex {
            centers: [
                Vec3::new(1.0, -1.0, 1.0) / s3,
                Vec3::new(1.0, -1.0, -1.0) / s3,
                Vec3::new(-2.0, 1.0, 0.0) / s5,
                Vec3::new(-1.0, -1.0, 0.0) / s2,
            ],
        }
    }
}

impl FourVortex {
    pub fn centers(&self) -> &[Vec3; 4] {
        &self.centers
    }

    fn denominators(&self, x: Vec3) -> Result<[f64; 4]> {
        let mut d = [0.0; 4];
        for (i, c) in self.centers.iter().enumerate() {
            d[i] = 1.0 - c.dot(x);
            if d[i] < VORTEX_GUARD {
                return Err(Error::Singularity {
                    field: self.name().into(),
                    center: i,
                });
            }
        }
        Ok(d)
    }
}

impl VectorField for FourVortex {
    fn name(&self) -> &str {
        "four-vortex"
    }

    fn eval(&self, x: Vec3, _t: f64) -> Result<Vec3> {
        let d = self.denominators(x)?;
        let v = self
            .centers
            .iter()
            .zip(d)
            .fold(Vec3::ZERO, |acc, (c, di)| acc + c.cross(x) / (2.0 * di));
        require_finite(self.name(), v)
    }

    fn jacobian(&self, x: Vec3, _t: f64) -> Result<Mat3> {
        let d = self.denominators(x)?;
        let mut jac = Mat3::zeros();
        for (c, di) in self.centers.iter().zip(d) {
            // ∂/∂x [c × x / (2d)] = [c]× / (2d) + (c × x) cᵀ / (2d²)
            jac = jac
                + Mat3::skew(*c).scale(1.0 / (2.0 * di))
                + Mat3::outer(c.cross(x), *c).scale(1.0 / (2.0 * di * di));
        }
        Ok(jac)
    }

    fn has_analytic_jacobian(&self) -> bool {
        true
    }
}

/// `q' = (I - q qᵀ) M q` with `M = diag(1/2, -1/2, -1/2)`; `±e1` attract
/// with tangent eigenvalues `-1`.
#[derive(Clone, Debug)]
pub struct StiffAttractor {
    m: [f64; 3],
}

impl Default for StiffAttractor {
    fn default() -> Self {
        StiffAttractor {
            m: [0.5, -0.5, -0.5],
        }
    }
}

impl StiffAttractor {
    fn apply_m(&self, q: Vec3) -> Vec3 {
        Vec3::new(self.m[0] * q.x, self.m[1] * q.y, self.m[2] * q.z)
    }
}

impl VectorField for StiffAttractor {
    fn name(&self) -> &str {
        "stiff-attractor"
    }

    fn eval(&self, q: Vec3, _t: f64) -> Result<Vec3> {
        let mq = self.apply_m(q);
        Ok(mq - q * q.dot(mq))
    }

    fn jacobian(&self, q: Vec3, _t: f64) -> Result<Mat3> {
        // M - 2 q (Mq)ᵀ - (qᵀMq) I, M symmetric
        let mq = self.apply_m(q);
        Ok(Mat3::diag(self.m) - Mat3::outer(q, mq).scale(2.0) - Mat3::identity().scale(q.dot(mq)))
    }

    fn has_analytic_jacobian(&self) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidBodyParams {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

impl Default for RigidBodyParams {
    fn default() -> Self {
        RigidBodyParams {
            i1: 2.0,
            i2: 1.0,
            i3: 2.0 / 3.0,
        }
    }
}

impl RigidBodyParams {
    pub fn new(i1: f64, i2: f64, i3: f64) -> Result<Self> {
        if [i1, i2, i3].iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "moments of inertia must be positive, got ({i1}, {i2}, {i3})"
            )));
        }
        Ok(RigidBodyParams { i1, i2, i3 })
    }

    /// `(a1, a2, a3)` with `a1 = (I2 - I3)/(I2 I3)` and cyclic permutations.
    pub fn coefficients(&self) -> [f64; 3] {
        let RigidBodyParams { i1, i2, i3 } = *self;
        [
            (i2 - i3) / (i2 * i3),
            (i3 - i1) / (i3 * i1),
            (i1 - i2) / (i1 * i2),
        ]
    }
}

/// Free rigid body (Euler equations for the angular momentum).
#[derive(Clone, Debug, Default)]
pub struct RigidBody {
    params: RigidBodyParams,
}

impl RigidBody {
    pub fn new(params: RigidBodyParams) -> Self {
        RigidBody { params }
    }

    pub fn params(&self) -> RigidBodyParams {
        self.params
    }
}

impl VectorField for RigidBody {
    fn name(&self) -> &str {
        "rigid-body"
    }

    fn eval(&self, y: Vec3, _t: f64) -> Result<Vec3> {
        let [a1, a2, a3] = self.params.coefficients();
        Ok(Vec3::new(a1 * y.y * y.z, a2 * y.z * y.x, a3 * y.x * y.y))
    }

    fn jacobian(&self, y: Vec3, _t: f64) -> Result<Mat3> {
        let [a1, a2, a3] = self.params.coefficients();
        Ok(crate::linalg::Matrix([
            [0.0, a1 * y.z, a1 * y.y],
            [a2 * y.z, 0.0, a2 * y.x],
            [a3 * y.y, a3 * y.x, 0.0],
        ]))
    }

    fn has_analytic_jacobian(&self) -> bool {
        true
    }

    fn hamiltonian(&self, y: Vec3) -> Option<f64> {
        let p = self.params;
        Some(0.5 * (y.x * y.x / p.i1 + y.y * y.y / p.i2 + y.z * y.z / p.i3))
    }
}

/// Spinning top with a cubic perturbation,
/// `H(p) = ½ Σ (p_j² + c p_j³) / I_j`, flowing as `p' = p × ∇H(p)`.
#[derive(Clone, Debug)]
pub struct PerturbedTop {
    inertia: [f64; 3],
    cubic: f64,
}

impl Default for PerturbedTop {
    fn default() -> Self {
        PerturbedTop {
            inertia: [1.0, 2.0, 4.0],
            cubic: 2.0 / 3.0,
        }
    }
}

impl PerturbedTop {
    pub fn new(inertia: [f64; 3], cubic: f64) -> Result<Self> {
        if inertia.iter().any(|v| !(*v > 0.0 && v.is_finite())) || !cubic.is_finite() {
            return Err(Error::InvalidInput(format!(
                "invalid top parameters {inertia:?}, cubic {cubic}"
            )));
        }
        Ok(PerturbedTop { inertia, cubic })
    }

    pub fn grad_h(&self, p: Vec3) -> Vec3 {
        let g = |j: usize| (p[j] + 1.5 * self.cubic * p[j] * p[j]) / self.inertia[j];
        Vec3::new(g(0), g(1), g(2))
    }

    fn hessian_diag(&self, p: Vec3) -> [f64; 3] {
        [0, 1, 2].map(|j| (1.0 + 3.0 * self.cubic * p[j]) / self.inertia[j])
    }
}

impl VectorField for PerturbedTop {
    fn name(&self) -> &str {
        "perturbed-top"
    }

    fn eval(&self, p: Vec3, _t: f64) -> Result<Vec3> {
        Ok(p.cross(self.grad_h(p)))
    }

    fn jacobian(&self, p: Vec3, _t: f64) -> Result<Mat3> {
        // ∂(p × w(p)) = -[w]× + [p]× ∂w
        Ok(Mat3::skew(p) * Mat3::diag(self.hessian_diag(p)) - Mat3::skew(self.grad_h(p)))
    }

    fn has_analytic_jacobian(&self) -> bool {
        true
    }

    fn hamiltonian(&self, p: Vec3) -> Option<f64> {
        Some(
            0.5 * (0..3)
                .map(|j| (p[j] * p[j] + self.cubic * p[j].powi(3)) / self.inertia[j])
                .sum::<f64>(),
        )
    }
}

/// Registry of the benchmark problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Problem {
    FourVortex,
    StiffAttractor,
    RigidBody,
    PerturbedTop,
}

impl Problem {
    pub const ALL: [Problem; 4] = [
        Problem::FourVortex,
        Problem::StiffAttractor,
        Problem::RigidBody,
        Problem::PerturbedTop,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Problem::FourVortex => "four-vortex",
            Problem::StiffAttractor => "stiff-attractor",
            Problem::RigidBody => "rigid-body",
            Problem::PerturbedTop => "perturbed-top",
        }
    }

    pub fn field(self) -> Arc<dyn VectorField> {
        match self {
            Problem::FourVortex => Arc::new(FourVortex::default()),
            Problem::StiffAttractor => Arc::new(StiffAttractor::default()),
            Problem::RigidBody => Arc::new(RigidBody::default()),
            Problem::PerturbedTop => Arc::new(PerturbedTop::default()),
        }
    }

    /// Default initial state used by the experiment harness.
    pub fn default_start(self) -> Vec3 {
        match self {
            Problem::FourVortex => Vec3::E1,
            Problem::StiffAttractor => {
                let (s, c) = 1.2f64.sin_cos();
                let v = Vec3::new(s, 0.3 * c, -0.954 * c);
                v / v.norm()
            }
            Problem::RigidBody => {
                let (s, c) = 1.1f64.sin_cos();
                Vec3::new(c, 0.0, s)
            }
            Problem::PerturbedTop => PERTURBED_TOP_START,
        }
    }
}

/// Start for the perturbed top: on a closed level curve of `H`, clear of
/// the equilibria.
pub const PERTURBED_TOP_START: Vec3 = Vec3::new(0.0, 0.6, 0.8);

impl FromStr for Problem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Problem::ALL
            .into_iter()
            .find(|p| p.key() == s)
            .ok_or_else(|| Error::UnknownProblem(s.into()))
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Relative Hamiltonian error `|H(p_n) - H(p_0)| / |H(p_0)|` along a
/// trajectory.
pub fn hamiltonian_trace<F: VectorField + ?Sized>(
    traj: &Trajectory,
    field: &F,
) -> Result<Vec<f64>> {
    let missing = || Error::MissingObservable(field.name().into());
    let Some(first) = traj.states.first() else {
        return Ok(Vec::new());
    };
    let h0 = field.hamiltonian(first.vec()).ok_or_else(missing)?;
    traj.states
        .iter()
        .map(|p| {
            let h = field.hamiltonian(p.vec()).ok_or_else(missing)?;
            Ok((h - h0).abs() / h0.abs())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::jacobian_fd;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
        let z: f64 = rng.gen_range(-1.0..1.0);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).sqrt();
        Vec3::new(r * phi.cos(), r * phi.sin(), z)
    }

    fn rel_err(a: &Mat3, b: &Mat3) -> f64 {
        (*a - *b).frobenius_norm() / b.frobenius_norm().max(1e-300)
    }

    #[test]
    fn every_field_is_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for problem in Problem::ALL {
            let f = problem.field();
            let mut checked = 0;
            while checked < 1000 {
                let p = random_unit(&mut rng);
                let Ok(v) = f.eval(p, 0.0) else { continue };
                assert!(
                    v.dot(p).abs() <= 1e-10 * v.norm().max(1.0),
                    "{problem}: {}",
                    v.dot(p)
                );
                checked += 1;
            }
        }
    }

    #[test]
    fn analytic_jacobians_match_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for problem in Problem::ALL {
            let f = problem.field();
            assert!(f.has_analytic_jacobian());
            let mut checked = 0;
            while checked < 100 {
                let p = random_unit(&mut rng);
                if problem == Problem::FourVortex
                    && FourVortex::default()
                        .centers()
                        .iter()
                        .any(|c| 1.0 - c.dot(p) < 0.05)
                {
                    continue;
                }
                let a = f.jacobian(p, 0.0).unwrap();
                let n = jacobian_fd(&*f, p, 0.0).unwrap();
                assert!(rel_err(&a, &n) <= 1e-6, "{problem}: {}", rel_err(&a, &n));
                checked += 1;
            }
        }
    }

    #[test]
    fn four_vortex_at_e1_matches_termwise_sum() {
        // x_i × e1 = (0, z_i, -y_i), 1 - x_i.e1 = 1 - x_i1
        let terms = [
            (1.0 / 3f64.sqrt(), -1.0 / 3f64.sqrt(), 1.0 / 3f64.sqrt()),
            (1.0 / 3f64.sqrt(), -1.0 / 3f64.sqrt(), -1.0 / 3f64.sqrt()),
            (-2.0 / 5f64.sqrt(), 1.0 / 5f64.sqrt(), 0.0),
            (-1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0),
        ];
        let mut want = Vec3::ZERO;
        for (x1, x2, x3) in terms {
            want += Vec3::new(0.0, x3, -x2) / (2.0 * (1.0 - x1));
        }
        let got = FourVortex::default().eval(Vec3::E1, 0.0).unwrap();
        assert!((got - want).max_abs() < 1e-15);
    }

    #[test]
    fn four_vortex_rejects_centers() {
        let f = FourVortex::default();
        let c = f.centers()[2];
        assert!(matches!(
            f.eval(c, 0.0),
            Err(Error::Singularity { center: 2, .. })
        ));
        assert!(f.jacobian(c, 0.0).is_err());
    }

    #[test]
    fn stiff_attractor_equilibria() {
        let f = StiffAttractor::default();
        for p in [Vec3::E1, -Vec3::E1, Vec3::E2, Vec3::E3] {
            assert_eq!(f.eval(p, 0.0).unwrap().max_abs(), 0.0);
        }
        // tangent-plane spectrum at e1 is {-1, -1}
        let g = f.jacobian(Vec3::E1, 0.0).unwrap();
        assert!((g[(1, 1)] + 1.0).abs() < 1e-15 && (g[(2, 2)] + 1.0).abs() < 1e-15);
        assert_eq!(g[(1, 2)], 0.0);
    }

    #[test]
    fn rigid_body_coefficients() {
        let [a1, a2, a3] = RigidBodyParams::default().coefficients();
        assert!((a1 - 0.5).abs() < 1e-15);
        assert!((a2 + 1.0).abs() < 1e-15);
        assert!((a3 - 0.5).abs() < 1e-15);
        assert!(RigidBodyParams::new(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn rigid_body_is_poisson_flow() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = RigidBodyParams::new(1.3, 0.7, 2.9).unwrap();
        let [a1, a2, a3] = params.coefficients();
        assert!((a1 + a2 + a3).abs() < 1e-15);
        let f = RigidBody::new(params);
        for _ in 0..200 {
            let y = random_unit(&mut rng);
            let grad = Vec3::new(y.x / params.i1, y.y / params.i2, y.z / params.i3);
            let v = f.eval(y, 0.0).unwrap();
            assert!((v - y.cross(grad)).max_abs() < 1e-14);
            assert!(v.dot(y).abs() < 1e-15);
        }
    }

    #[test]
    fn perturbed_top_reduces_to_rigid_body() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let top = PerturbedTop::new([2.0, 1.0, 2.0 / 3.0], 0.0).unwrap();
        let body = RigidBody::default();
        for _ in 0..200 {
            let p = random_unit(&mut rng);
            let d = top.eval(p, 0.0).unwrap() - body.eval(p, 0.0).unwrap();
            assert!(d.max_abs() < 1e-14);
            let dh = top.hamiltonian(p).unwrap() - body.hamiltonian(p).unwrap();
            assert!(dh.abs() < 1e-15);
        }
    }

    #[test]
    fn perturbed_top_gradient_matches_hamiltonian() {
        let top = PerturbedTop::default();
        let p = Vec3::new(0.3, -0.5, 0.81);
        let h = 1e-6;
        for j in 0..3 {
            let mut e = [0.0; 3];
            e[j] = h;
            let e = Vec3::from(e);
            let fd =
                (top.hamiltonian(p + e).unwrap() - top.hamiltonian(p - e).unwrap()) / (2.0 * h);
            assert!((fd - top.grad_h(p)[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn registry_round_trip() {
        for p in Problem::ALL {
            assert_eq!(p.key().parse::<Problem>().unwrap(), p);
            assert_eq!(p.field().name(), p.key());
            assert!((p.default_start().norm() - 1.0).abs() < 1e-15);
        }
        assert!(matches!(
            "nope".parse::<Problem>(),
            Err(Error::UnknownProblem(_))
        ));
    }
}
