mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphere_ivp::field::VectorField;
use sphere_ivp::geometry::{midpoint_jacobian, Vec3};
use sphere_ivp::integrators::systems::{
    backward_trace_block, forward_trace_block, pack, pbe3_jacobian, pbe3_residual, pbe6_jacobian,
    pbe6_residual, sbe_jacobian, sbe_residual, scn_forward_jacobian, scn_forward_residual,
    scn_g_block, scn_jacobian, scn_residual,
};
use sphere_ivp::linalg::{Mat3, Mat6};
use sphere_ivp::problems::{FourVortex, PerturbedTop, Problem};

use common::*;

const GUARD: f64 = f64::EPSILON;

/// Random `(q*, q, s, h)` with the midpoint clear of the vortex cores.
fn sample(rng: &mut ChaCha8Rng) -> (Vec3, Vec3, Vec3, f64) {
    let vortex = FourVortex::default();
    loop {
        let a = random_unit(rng);
        let b = random_unit(rng);
        let m = midpoint_oracle(a.vec(), b.vec());
        if a.dot(b) < -0.5 || vortex.centers().iter().any(|c| 1.0 - c.dot(m) < 0.2) {
            continue;
        }
        let s = tangent(b, random_vec(rng, 1.5));
        return (a.vec(), b.vec(), s, rng.gen_range(0.05..1.0));
    }
}

fn fd6(f: impl Fn(&[f64; 6]) -> [f64; 6], x: [f64; 6]) -> Mat6 {
    let d = 1e-5;
    let mut jac = Mat6::zeros();
    for j in 0..6 {
        let (mut up, mut dn) = (x, x);
        up[j] += d;
        dn[j] -= d;
        let (fu, fd) = (f(&up), f(&dn));
        for i in 0..6 {
            jac[(i, j)] = (fu[i] - fd[i]) / (2.0 * d);
        }
    }
    jac
}

fn rel6(a: &Mat6, b: &Mat6) -> f64 {
    (*a - *b).max_abs() / b.max_abs()
}

#[test]
fn backward_euler_velocity_block() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let (_, q, s, h) = sample(&mut rng);
        let f = |s: Vec3| q * (h * s.norm()).cos() - s * ((h * s.norm()).sin() / s.norm());
        let err = rel_err(&backward_trace_block(s, q, h, GUARD), &fd_jacobian(f, s));
        assert!(err <= 1e-6, "{err}");
    }
}

#[test]
fn midpoint_velocity_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let (a, b, s, h) = sample(&mut rng);
        let m = midpoint_oracle(a, b);
        let tau = 0.5 * h;
        let back = |s: Vec3| m * (tau * s.norm()).cos() - s * ((tau * s.norm()).sin() / s.norm());
        let fwd = |s: Vec3| -(m * (tau * s.norm()).cos()) - s * ((tau * s.norm()).sin() / s.norm());
        assert!(
            rel_err(
                &backward_trace_block(s, m, tau, GUARD),
                &fd_jacobian(back, s)
            ) <= 1e-6
        );
        assert!(rel_err(&forward_trace_block(s, m, tau, GUARD), &fd_jacobian(fwd, s)) <= 1e-6);
    }
}

/// Entering the forward-traced block with a minus sign, a tempting reading
/// of the system, disagrees with differentiating the residual.
#[test]
fn negated_forward_block_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (a, b, s, h) = sample(&mut rng);
    let m = midpoint_oracle(a, b);
    let tau = 0.5 * h;
    let fwd = |s: Vec3| -(m * (tau * s.norm()).cos()) - s * ((tau * s.norm()).sin() / s.norm());
    let negated = -forward_trace_block(s, m, tau, GUARD);
    assert!(rel_err(&negated, &fd_jacobian(fwd, s)) > 0.5);
}

#[test]
fn midpoint_block() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let (a, b, _, _) = sample(&mut rng);
        let fd = fd_jacobian(|x| midpoint_oracle(a, x), b);
        assert!(rel_err(&midpoint_jacobian(a, b).unwrap(), &fd) <= 1e-6);
    }
}

#[test]
fn typo_midpoint_block_fails_off_diagonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let (a, b, _, _) = sample(&mut rng);
        let fd = fd_jacobian(|x| midpoint_oracle(a, x), b);
        let typo = typo_midpoint_jacobian(a, b);
        assert!(rel_err_where(&typo, &fd, |i, j| i != j) > 1e-6);
    }
}

#[test]
fn midpoint_block_is_half_identity_at_coincidence() {
    let a = Vec3::new(0.6, 0.0, 0.8);
    let k = midpoint_jacobian(a, a).unwrap();
    let expected = (Mat3::identity() - Mat3::outer(a, a).scale(0.5)).scale(0.5);
    assert!((k - expected).max_abs() < 1e-15);
}

#[test]
fn chain_rule_block() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for problem in Problem::ALL {
        let field = problem.field();
        for _ in 0..25 {
            let (a, b, _, h) = sample(&mut rng);
            let fd = fd_jacobian(|x| field.eval(midpoint_oracle(a, x), 0.0).unwrap(), b);
            let g = scn_g_block(field.as_ref(), a, 0.0, h, b).unwrap();
            assert!(rel_err(&g, &fd) <= 1e-6, "{problem}");
        }
    }
}

#[test]
fn field_jacobians() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let vortex = FourVortex::default();
    for problem in Problem::ALL {
        let field = problem.field();
        assert!(field.has_analytic_jacobian(), "{problem}");
        let mut n = 0;
        while n < 100 {
            let p = random_unit(&mut rng).vec();
            if vortex.centers().iter().any(|c| 1.0 - c.dot(p) < 0.05) {
                continue;
            }
            n += 1;
            let fd = fd_jacobian(|x| field.eval(x, 0.0).unwrap(), p);
            let err = rel_err(&field.jacobian(p, 0.0).unwrap(), &fd);
            assert!(err <= 1e-6, "{problem}: {err}");
        }
    }
}

#[test]
fn top_gradient() {
    let top = PerturbedTop::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let p = random_unit(&mut rng).vec();
        let d = 1e-6;
        let fd = Vec3::new(
            (top.hamiltonian(p + Vec3::E1 * d).unwrap()
                - top.hamiltonian(p - Vec3::E1 * d).unwrap())
                / (2.0 * d),
            (top.hamiltonian(p + Vec3::E2 * d).unwrap()
                - top.hamiltonian(p - Vec3::E2 * d).unwrap())
                / (2.0 * d),
            (top.hamiltonian(p + Vec3::E3 * d).unwrap()
                - top.hamiltonian(p - Vec3::E3 * d).unwrap())
                / (2.0 * d),
        );
        assert!((top.grad_h(p) - fd).norm() <= 1e-7 * fd.norm().max(1.0));
    }
}

#[test]
fn full_newton_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for problem in Problem::ALL {
        let field = problem.field();
        let f = field.as_ref();
        for _ in 0..20 {
            let (a, b, s, h) = sample(&mut rng);
            let x = pack(s, b);
            let t = 0.3;

            let j = sbe_jacobian(f, t, h, GUARD, &x).unwrap();
            let fd = fd6(|y| sbe_residual(f, a, t, h, GUARD, y).unwrap(), x);
            assert!(rel6(&j, &fd) <= 1e-6, "sbe {problem}");

            let j = scn_jacobian(f, a, t, h, GUARD, &x).unwrap();
            let fd = fd6(|y| scn_residual(f, a, t, h, GUARD, y).unwrap(), x);
            assert!(rel6(&j, &fd) <= 1e-6, "scn {problem}");

            let j = scn_forward_jacobian(f, a, t, h, GUARD, &x).unwrap();
            let fd = fd6(|y| scn_forward_residual(f, a, t, h, GUARD, y).unwrap(), x);
            assert!(rel6(&j, &fd) <= 1e-6, "scn forward {problem}");

            let j = pbe6_jacobian(f, t, h, &x).unwrap();
            let fd = fd6(|y| pbe6_residual(f, a, t, h, y).unwrap(), x);
            assert!(rel6(&j, &fd) <= 1e-6, "pbe6 {problem}");

            let q = b * 1.1;
            let j = pbe3_jacobian(f, t, h, &q.to_array()).unwrap();
            let fd = fd_jacobian(
                |y| Vec3::from(pbe3_residual(f, a, t, h, &y.to_array()).unwrap()),
                q,
            );
            assert!(rel_err(&j, &fd) <= 1e-6, "pbe3 {problem}");
        }
    }
}
