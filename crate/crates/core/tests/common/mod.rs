#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sphere_ivp::geometry::{UnitPoint3, Vec3};
use sphere_ivp::linalg::Mat3;

pub fn random_unit(rng: &mut ChaCha8Rng) -> UnitPoint3 {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).sqrt();
    UnitPoint3::new(r * phi.cos(), r * phi.sin(), z).unwrap()
}

pub fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

/// Tangent part of `v` at `p`.
pub fn tangent(p: UnitPoint3, v: Vec3) -> Vec3 {
    v - p.vec() * p.vec().dot(v)
}

/// Central differences of `f` at `x`, fourth order in the step.
pub fn fd_jacobian(f: impl Fn(Vec3) -> Vec3, x: Vec3) -> Mat3 {
    let d = 1e-4 * x.norm().max(1.0);
    let mut jac = Mat3::zeros();
    for j in 0..3 {
        let mut e = [0.0; 3];
        e[j] = 1.0;
        let e = Vec3::from(e);
        let col = (f(x - e * (2.0 * d)) - f(x + e * (2.0 * d))
            + (f(x + e * d) - f(x - e * d)) * 8.0)
            / (12.0 * d);
        for i in 0..3 {
            jac[(i, j)] = col[i];
        }
    }
    jac
}

/// `max |a - b| / max |b|` over the entries selected by `keep`.
pub fn rel_err_where(a: &Mat3, b: &Mat3, keep: impl Fn(usize, usize) -> bool) -> f64 {
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            if keep(i, j) {
                diff = diff.max((a[(i, j)] - b[(i, j)]).abs());
                scale = scale.max(b[(i, j)].abs());
            }
        }
    }
    diff / scale.max(1e-300)
}

pub fn rel_err(a: &Mat3, b: &Mat3) -> f64 {
    rel_err_where(a, b, |_, _| true)
}

/// Midpoint derivative with two typos: a constant 1 where `δ_ij` belongs
/// and `1/2` where `1/4` belongs. Kept only to show that finite differences
/// reject it.
pub fn typo_midpoint_jacobian(q_star: Vec3, q: Vec3) -> Mat3 {
    let theta = q_star.dot(q).clamp(-1.0, 1.0).acos();
    let sec = 1.0 / (0.5 * theta).cos();
    let sum = q_star + q;
    Mat3::from_fn(|i, j| 0.5 * sec * (1.0 - 0.5 * q_star[j] * sum[i] * sec * sec))
}

/// `(a + b) / (2 cos(θ/2))` with `cos θ = a.b`, written independently of the
/// library.
pub fn midpoint_oracle(a: Vec3, b: Vec3) -> Vec3 {
    (a + b) / (2.0 * (1.0 + a.dot(b))).sqrt()
}

pub fn median(values: &mut [usize]) -> f64 {
    values.sort_unstable();
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2]) as f64
    }
}
