//! Geometry of the unit sphere: ambient vectors, unit points, quaternions,
//! spherical linear interpolation and the exponential map.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::linalg::Mat3;

/// Tolerance on `| |p| - 1 |` accepted by [`UnitPoint3::new`].
pub const UNIT_TOL: f64 = 1e-9;
/// Angles below this (radians) interpolate linearly and renormalize.
pub const PARALLEL_TOL: f64 = 1e-8;
/// Pairs with `a.b <= -1 + ANTIPODE_TOL` are rejected as antipodal.
pub const ANTIPODE_TOL: f64 = 1e-8;

/// `max(|v|, guard)`, used wherever a velocity norm lands in a denominator.
#[inline]
pub fn guarded_norm(v: Vec3, guard: f64) -> f64 {
    v.norm().max(guard)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const E1: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const E2: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const E3: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// A point on the unit sphere S².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitPoint3(Vec3);

impl UnitPoint3 {
    /// Checked constructor: fails unless `| |(x,y,z)| - 1 | <= UNIT_TOL`.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::try_from_vec(Vec3::new(x, y, z))
    }

    pub fn try_from_vec(v: Vec3) -> Result<Self> {
        let norm = v.norm();
        if !v.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnit { norm });
        }
        Ok(UnitPoint3(v))
    }

    pub fn vec(self) -> Vec3 {
        self.0
    }

    pub fn x(self) -> f64 {
        self.0.x
    }

    pub fn y(self) -> f64 {
        self.0.y
    }

    pub fn z(self) -> f64 {
        self.0.z
    }

    pub fn dot(self, o: UnitPoint3) -> f64 {
        self.0.dot(o.0)
    }

    pub fn distance(self, o: UnitPoint3) -> f64 {
        (self.0 - o.0).norm()
    }
}

impl From<UnitPoint3> for Vec3 {
    fn from(p: UnitPoint3) -> Vec3 {
        p.0
    }
}

/// Radial projection `q / |q|` onto the sphere.
pub fn project(q: Vec3) -> Result<UnitPoint3> {
    let n = q.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(UnitPoint3(q / n))
}

/// Quaternion `(a, u)` with scalar part `a` and vector part `u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quaternion {
    pub a: f64,
    pub u: Vec3,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        a: 1.0,
        u: Vec3::ZERO,
    };

    pub const fn new(a: f64, u: Vec3) -> Self {
        Quaternion { a, u }
    }

    pub fn pure(u: Vec3) -> Self {
        Quaternion { a: 0.0, u }
    }

    pub fn norm(self) -> f64 {
        (self.a * self.a + self.u.norm_squared()).sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Quaternion::new(self.a * s, self.u * s)
    }

    /// `(a1 a2 - u1.u2, a1 u2 + a2 u1 + u1 × u2)`.
    pub fn hamilton(self, o: Quaternion) -> Quaternion {
        Quaternion::new(
            self.a * o.a - self.u.dot(o.u),
            self.a * o.u + o.a * self.u + self.u.cross(o.u),
        )
    }

    pub fn inverse(self) -> Result<Quaternion> {
        let n2 = self.a * self.a + self.u.norm_squared();
        if n2 == 0.0 {
            return Err(Error::ZeroQuaternion);
        }
        Ok(Quaternion::new(self.a / n2, -self.u / n2))
    }

    pub fn exp(self) -> Quaternion {
        let un = guarded_norm(self.u, f64::EPSILON);
        let ea = self.a.exp();
        Quaternion::new(ea * un.cos(), self.u * (ea * un.sin() / un))
    }

    pub fn ln(self) -> Result<Quaternion> {
        let qn = self.norm();
        if qn == 0.0 {
            return Err(Error::ZeroQuaternion);
        }
        let un = guarded_norm(self.u, f64::EPSILON);
        let angle = (self.a / qn).clamp(-1.0, 1.0).acos();
        Ok(Quaternion::new(qn.ln(), self.u * (angle / un)))
    }

    /// `q^t = exp(t ln q)`.
    pub fn powf(self, t: f64) -> Result<Quaternion> {
        Ok(self.ln()?.scale(t).exp())
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        self.hamilton(o)
    }
}

pub fn hamilton_product(q1: Quaternion, q2: Quaternion) -> Quaternion {
    q1.hamilton(q2)
}

pub fn quat_inverse(q: Quaternion) -> Result<Quaternion> {
    q.inverse()
}

pub fn quat_exp(q: Quaternion) -> Quaternion {
    q.exp()
}

pub fn quat_log(q: Quaternion) -> Result<Quaternion> {
    q.ln()
}

pub fn quat_pow(q: Quaternion, t: f64) -> Result<Quaternion> {
    q.powf(t)
}

fn check_slerp_args(a: Vec3, b: Vec3, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!(
            "slerp parameter {t} outside [0, 1]"
        )));
    }
    let dot = a.dot(b);
    if dot <= -1.0 + ANTIPODE_TOL {
        return Err(Error::Antipodal { dot });
    }
    Ok(dot)
}

/// Spherical linear interpolation along the minor arc from `a` to `b`,
/// `[sin((1-t)θ) a + sin(tθ) b] / sin θ`.
pub fn slerp(a: UnitPoint3, b: UnitPoint3, t: f64) -> Result<UnitPoint3> {
    let (a, b) = (a.vec(), b.vec());
    let dot = check_slerp_args(a, b, t)?;
    let theta = a.cross(b).norm().atan2(dot);
    if theta < PARALLEL_TOL {
        return project(a * (1.0 - t) + b * t);
    }
    let s = theta.sin();
    project(a * (((1.0 - t) * theta).sin() / s) + b * ((t * theta).sin() / s))
}

/// Quaternion form of [`slerp`]: `q_a (q_a^{-1} q_b)^t` with `a`, `b` taken
/// as pure quaternions.
pub fn slerp_quaternion(a: UnitPoint3, b: UnitPoint3, t: f64) -> Result<UnitPoint3> {
    check_slerp_args(a.vec(), b.vec(), t)?;
    let qa = Quaternion::pure(a.vec());
    let qb = Quaternion::pure(b.vec());
    let rel = qa.inverse()? * qb;
    let q = qa * rel.powf(t)?;
    project(q.u)
}

/// Geodesic midpoint `SLERP(a, b, 1/2) = (a + b) / (2 cos(θ/2))` with
/// `cos θ = a.b`, evaluated for arbitrary ambient `b` (this is the extension
/// differentiated by [`midpoint_jacobian`]).
pub fn slerp_midpoint(a: Vec3, b: Vec3) -> Result<Vec3> {
    let dot = a.dot(b);
    if dot <= -1.0 + ANTIPODE_TOL {
        return Err(Error::Antipodal { dot });
    }
    Ok((a + b) / (2.0 * (1.0 + dot)).sqrt())
}

/// `K_ij = ∂/∂q_j SLERP_i(q*, q, 1/2)`
/// `= (1/2) sec(θ/2) [δ_ij - (1/4) q*_j (q*_i + q_i) sec²(θ/2)]`.
pub fn midpoint_jacobian(q_star: Vec3, q: Vec3) -> Result<Mat3> {
    let dot = q_star.dot(q);
    if dot <= -1.0 + ANTIPODE_TOL {
        return Err(Error::Antipodal { dot });
    }
    let sec = 1.0 / ((1.0 + dot) / 2.0).sqrt();
    let sum = q_star + q;
    Ok(Mat3::from_fn(|i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        0.5 * sec * (delta - 0.25 * q_star[j] * sum[i] * sec * sec)
    }))
}

pub fn slerp_mid_jacobian(q_star: UnitPoint3, q: UnitPoint3) -> Result<Mat3> {
    midpoint_jacobian(q_star.vec(), q.vec())
}

/// `cos(h|v|) p + sin(h|v|) v/|v|`, with `|v|` replaced by `max(|v|, guard)`.
/// Returned unnormalized.
pub fn exp_map_raw(p: Vec3, v: Vec3, h: f64, guard: f64) -> Vec3 {
    let n = guarded_norm(v, guard);
    let angle = h * n;
    p * angle.cos() + v * (angle.sin() / n)
}

/// Exponential map `exp_p(h v)` for a tangent velocity `v` at `p`.
pub fn exp_map(p: UnitPoint3, v: Vec3, h: f64) -> UnitPoint3 {
    let raw = exp_map_raw(p.vec(), v, h, f64::EPSILON);
    // unit up to rounding whenever v is tangent
    project(raw).unwrap_or(p)
}

/// Unit tangent of the geodesic `exp_p(t v)` at `t = h`, scaled by `|v|`.
pub fn geodesic_terminal_velocity(p: UnitPoint3, v: Vec3, h: f64) -> Vec3 {
    let n = guarded_norm(v, f64::EPSILON);
    let angle = h * n;
    p.vec() * (-n * angle.sin()) + v * angle.cos()
}
