//! Nonlinear systems solved by the implicit steps and their Jacobians.
//!
//! Unknowns are packed as `x = (s, q)` with `s` the velocity and `q` the
//! position. `base` is the takeoff point `pⁿ` and `guard` the lower bound on
//! `|s|` in denominators.

use crate::error::Result;
use crate::field::VectorField;
use crate::geometry::{guarded_norm, midpoint_jacobian, slerp_midpoint, Vec3};
use crate::linalg::{Mat3, Mat6};

pub fn pack(s: Vec3, q: Vec3) -> [f64; 6] {
    [s.x, s.y, s.z, q.x, q.y, q.z]
}

pub fn unpack(x: &[f64; 6]) -> (Vec3, Vec3) {
    (Vec3::new(x[0], x[1], x[2]), Vec3::new(x[3], x[4], x[5]))
}

fn join(a: Vec3, b: Vec3) -> [f64; 6] {
    pack(a, b)
}

/// Derivative with respect to `s` of `cos(τ|s|) c - sin(τ|s|) s/|s|`:
///
/// `-τ sin(τ|s|) c_i s_j/|s| - τ cos(τ|s|) s_i s_j/|s|² - sin(τ|s|)(δ_ij/|s| - s_i s_j/|s|³)`.
///
/// With `τ = h`, `c = q` this is the `J` block of the backward Euler system;
/// with `τ = h/2`, `c = SLERP(q*, q, 1/2)` it is the `H` block of the
/// Crank-Nicolson system.
pub fn backward_trace_block(s: Vec3, c: Vec3, tau: f64, guard: f64) -> Mat3 {
    let n = guarded_norm(s, guard);
    let (sin, cos) = (tau * n).sin_cos();
    Mat3::from_fn(|i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        -tau * sin * c[i] * s[j] / n
            - tau * cos * s[i] * s[j] / (n * n)
            - sin * (delta / n - s[i] * s[j] / (n * n * n))
    })
}

/// Derivative with respect to `s` of `-cos(τ|s|) c - sin(τ|s|) s/|s|`, the
/// velocity block of the forward-traced Crank-Nicolson variant.
pub fn forward_trace_block(s: Vec3, c: Vec3, tau: f64, guard: f64) -> Mat3 {
    let n = guarded_norm(s, guard);
    let (sin, cos) = (tau * n).sin_cos();
    Mat3::from_fn(|i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        tau * sin * c[i] * s[j] / n
            - tau * cos * s[i] * s[j] / (n * n)
            - sin * (delta / n - s[i] * s[j] / (n * n * n))
    })
}

/// Spherical backward Euler:
/// `(s - g(q), -pⁿ + cos(h|s|) q - sin(h|s|) s/|s|)` with `g = f(·, t + h)`.
pub fn sbe_residual<F: VectorField + ?Sized>(
    field: &F,
    base: Vec3,
    t: f64,
    h: f64,
    guard: f64,
    x: &[f64; 6],
) -> Result<[f64; 6]> {
    let (s, q) = unpack(x);
    let n = guarded_norm(s, guard);
    let (sin, cos) = (h * n).sin_cos();
    let g = field.eval(q, t + h)?;
    Ok(join(s - g, q * cos - s * (sin / n) - base))
}

/// `[[I, -G(q)], [J(s, q), cos(h|s|) I]]`.
pub fn sbe_jacobian<F: VectorField + ?Sized>(
    field: &F,
    t: f64,
    h: f64,
    guard: f64,
    x: &[f64; 6],
) -> Result<Mat6> {
    let (s, q) = unpack(x);
    let g = field.jacobian(q, t + h)?;
    let n = guarded_norm(s, guard);
    Ok(Mat6::from_blocks(
        &Mat3::identity(),
        &-g,
        &backward_trace_block(s, q, h, guard),
        &Mat3::identity().scale((h * n).cos()),
    ))
}

/// Ambient Jacobian of `q ↦ g(q/|q|)`: `G(q̂) (I - q̂q̂ᵀ) / |q|`.
fn projected_field_jacobian<F: VectorField + ?Sized>(field: &F, q: Vec3, t: f64) -> Result<Mat3> {
    let r = q.norm();
    let qh = q / r;
    let g = field.jacobian(qh, t)?;
    Ok(g * (Mat3::identity() - Mat3::outer(qh, qh)).scale(1.0 / r))
}

/// Projected backward Euler, reduced form: `-pⁿ + q - h g(q/|q|)`.
pub fn pbe3_residual<F: VectorField + ?Sized>(
    field: &F,
    base: Vec3,
    t: f64,
    h: f64,
    x: &[f64; 3],
) -> Result<[f64; 3]> {
    let q = Vec3::from(*x);
    let g = field.eval(q / q.norm(), t + h)?;
    Ok((q - g * h - base).to_array())
}

/// `I - h ∂/∂q g(q/|q|)`.
pub fn pbe3_jacobian<F: VectorField + ?Sized>(
    field: &F,
    t: f64,
    h: f64,
    x: &[f64; 3],
) -> Result<Mat3> {
    let q = Vec3::from(*x);
    Ok(Mat3::identity() - projected_field_jacobian(field, q, t + h)?.scale(h))
}

/// Projected backward Euler, embedded form: `(s - g(q/|q|), -pⁿ + q - h s)`.
pub fn pbe6_residual<F: VectorField + ?Sized>(
    field: &F,
    base: Vec3,
    t: f64,
    h: f64,
    x: &[f64; 6],
) -> Result<[f64; 6]> {
    let (s, q) = unpack(x);
    let g = field.eval(q / q.norm(), t + h)?;
    Ok(join(s - g, q - s * h - base))
}

/// `[[I, -G], [-h I, I]]` with `G` the Jacobian of `q ↦ g(q/|q|)`.
pub fn pbe6_jacobian<F: VectorField + ?Sized>(
    field: &F,
    t: f64,
    h: f64,
    x: &[f64; 6],
) -> Result<Mat6> {
    let (_, q) = unpack(x);
    let g = projected_field_jacobian(field, q, t + h)?;
    Ok(Mat6::from_blocks(
        &Mat3::identity(),
        &-g,
        &Mat3::identity().scale(-h),
        &Mat3::identity(),
    ))
}

/// Spherical Crank-Nicolson, backward-traced:
/// `(s - g(m), -pⁿ + cos(h|s|/2) m - sin(h|s|/2) s/|s|)` with
/// `m = SLERP(pⁿ, q, 1/2)` and `g = f(·, t + h/2)`.
pub fn scn_residual<F: VectorField + ?Sized>(
    field: &F,
    base: Vec3,
    t: f64,
    h: f64,
    guard: f64,
    x: &[f64; 6],
) -> Result<[f64; 6]> {
    let (s, q) = unpack(x);
    let m = slerp_midpoint(base, q)?;
    let n = guarded_norm(s, guard);
    let (sin, cos) = (0.5 * h * n).sin_cos();
    let g = field.eval(m, t + 0.5 * h)?;
    Ok(join(s - g, m * cos - s * (sin / n) - base))
}

/// Jacobian of `q ↦ g(SLERP(pⁿ, q, 1/2))` by the chain rule, `G_f(m) K`.
pub fn scn_g_block<F: VectorField + ?Sized>(
    field: &F,
    base: Vec3,
    t: f64,
    h: f64,
    q: Vec3,
) -> Result<Mat3> {
    let m = slerp_midpoint(base, q)?;
    let k = midpoint_jacobian(base, q)?;
    Ok(field.jacobian(m, t + 0.5 * h)? * k)
}

/// `[[I, -G], [H, cos(h|s|/2) K]]`.
pub fn scn_jacobian<F: VectorField + ?Sized>(
    field: &F,
    base: Vec3,
    t: f64,
    h: f64,
    guard: f64,
    x: &[f64; 6],
) -> Result<Mat6> {
    let (s, q) = unpack(x);
    let m = slerp_midpoint(base, q)?;
    let k = midpoint_jacobian(base, q)?;
    let g = field.jacobian(m, t + 0.5 * h)? * k;
    let n = guarded_norm(s, guard);
    Ok(Mat6::from_blocks(
        &Mat3::identity(),
        &-g,
        &backward_trace_block(s, m, 0.5 * h, guard),
        &k.scale((0.5 * h * n).cos()),
    ))
}

/// Spherical Crank-Nicolson, forward-traced:
/// `(s - g(m), q - cos(h|s|/2) m - sin(h|s|/2) s/|s|)`.
pub fn scn_forward_residual<F: VectorField + ?Sized>(
    field: &F,
    base: Vec3,
    t: f64,
    h: f64,
    guard: f64,
    x: &[f64; 6],
) -> Result<[f64; 6]> {
    let (s, q) = unpack(x);
    let m = slerp_midpoint(base, q)?;
    let n = guarded_norm(s, guard);
    let (sin, cos) = (0.5 * h * n).sin_cos();
    let g = field.eval(m, t + 0.5 * h)?;
    Ok(join(s - g, q - m * cos - s * (sin / n)))
}

/// `[[I, -G], [H_fwd, I - cos(h|s|/2) K]]` where `H_fwd` is
/// [`forward_trace_block`] evaluated at the midpoint.
pub fn scn_forward_jacobian<F: VectorField + ?Sized>(
    field: &F,
    base: Vec3,
    t: f64,
    h: f64,
    guard: f64,
    x: &[f64; 6],
) -> Result<Mat6> {
    let (s, q) = unpack(x);
    let m = slerp_midpoint(base, q)?;
    let k = midpoint_jacobian(base, q)?;
    let g = field.jacobian(m, t + 0.5 * h)? * k;
    let n = guarded_norm(s, guard);
    Ok(Mat6::from_blocks(
        &Mat3::identity(),
        &-g,
        &forward_trace_block(s, m, 0.5 * h, guard),
        &(Mat3::identity() - k.scale((0.5 * h * n).cos())),
    ))
}
