//! Implicit geometric integrators for ODEs on the unit sphere.
//!
//! The state `p` of `p' = f(p, t)` lives on S². Every integrator here keeps
//! it there by construction:
//!
//! - spherical forward Euler (explicit, exponential map),
//! - spherical backward Euler (exponential map traced backward; fixed-point
//!   and Newton solvers),
//! - projected backward Euler (Cartesian backward Euler plus projection;
//!   3×3 and 6×6 Newton forms),
//! - spherical Crank-Nicolson (geodesic midpoint via SLERP; second order,
//!   time-reversible, with a forward-traced variant).
//!
//! [`experiments`] reproduces the convergence, stability and energy-drift
//! studies and writes CSV; the `sphere-ivp` binary wraps it.
//!
//! ```
//! use sphere_ivp::prelude::*;
//!
//! let field = RigidBody::default();
//! let p0 = UnitPoint3::new(1.1f64.cos(), 0.0, 1.1f64.sin()).unwrap();
//! let traj = integrate(MethodKind::Scn, &field, p0, 0.0, 10.0, 0.5).unwrap();
//! let drift = hamiltonian_trace(&traj, &field).unwrap();
//! assert!(drift.iter().all(|d| *d < 1e-12));
//! ```

pub mod error;
pub mod experiments;
pub mod field;
pub mod geometry;
pub mod integrators;
pub mod linalg;
pub mod newton;
pub mod par;
pub mod problems;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::field::{jacobian_fd, FieldSpec, VectorField};
    pub use crate::geometry::{exp_map, project, slerp, UnitPoint3, Vec3};
    pub use crate::integrators::{
        integrate, integrate_with, step, IntegrateOptions, MethodKind, StepResult, Trajectory,
    };
    pub use crate::newton::{NewtonConfig, NewtonStats};
    pub use crate::par::Execution;
    pub use crate::problems::{
        hamiltonian_trace, FourVortex, PerturbedTop, Problem, RigidBody, RigidBodyParams,
        StiffAttractor,
    };
}
