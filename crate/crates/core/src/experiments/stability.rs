use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::{UnitPoint3, Vec3};
use crate::integrators::MethodKind;
use crate::par;
use crate::problems::Problem;

use super::{check_sweep, sweep, Harness};

/// Fraction of the run, counted from the end, that decides the verdict.
pub const VERDICT_WINDOW: f64 = 0.2;
/// Distance below which a decreasing run counts as converged.
pub const VERDICT_BAND: f64 = 1e-3;
/// A window whose last distance keeps at least this fraction of its first
/// one, while staying outside the band, has stalled away from the attractor.
const STALL_RATIO: f64 = 0.9;
/// Distances below this sit at the Newton tolerance; their jitter does not
/// break monotonicity.
const SETTLED: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    ConvergedToAttractor,
    DivergedFromAttractor,
    /// Still approaching, but not yet inside the band.
    Undetermined,
}

impl Verdict {
    pub fn key(self) -> &'static str {
        match self {
            Verdict::ConvergedToAttractor => "converged-to-attractor",
            Verdict::DivergedFromAttractor => "diverged-from-attractor",
            Verdict::Undetermined => "undetermined",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Classify a distance-to-attractor history.
///
/// Over the final [`VERDICT_WINDOW`] of the samples: monotone decrease
/// ending below [`VERDICT_BAND`] is convergence. Any sample above the
/// initial distance, or a window that stays outside the band without
/// shrinking (a limit cycle), is divergence.
pub fn stability_verdict(distances: &[f64]) -> Verdict {
    if distances.len() < 2 {
        return Verdict::Undetermined;
    }
    let n = distances.len();
    let width = ((n as f64 * VERDICT_WINDOW).ceil() as usize).clamp(2, n);
    let window = &distances[n - width..];
    let first = window[0];
    let last = window[width - 1];
    let initial = distances[0];

    if window.iter().any(|d| !d.is_finite() || *d > initial) {
        return Verdict::DivergedFromAttractor;
    }
    let monotone = window.windows(2).all(|w| w[1] <= w[0] || w[1] <= SETTLED);
    if monotone && last < VERDICT_BAND {
        return Verdict::ConvergedToAttractor;
    }
    let floor = window.iter().copied().fold(f64::INFINITY, f64::min);
    if floor > VERDICT_BAND && last >= STALL_RATIO * first {
        return Verdict::DivergedFromAttractor;
    }
    Verdict::Undetermined
}

/// A reproducible start point, uniform on the sphere but at least 0.1 away
/// from every equilibrium `±e_i` of the stiff attractor.
pub fn random_start(seed: u64) -> UnitPoint3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axes = [Vec3::E1, Vec3::E2, Vec3::E3];
    loop {
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).sqrt();
        let v = Vec3::new(r * phi.cos(), r * phi.sin(), z);
        let clear = axes
            .iter()
            .all(|a| (v - *a).norm() >= 0.1 && (v + *a).norm() >= 0.1);
        if clear {
            if let Ok(p) = UnitPoint3::try_from_vec(v) {
                return p;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityConfig {
    pub methods: Vec<MethodKind>,
    pub h_values: Vec<f64>,
    /// Runs take `floor(t_final / h)` full steps; no shortened final step.
    pub t_final: f64,
    pub p0: UnitPoint3,
    pub harness: Harness,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            methods: vec![
                MethodKind::Sfe,
                MethodKind::SbeNewton,
                MethodKind::Pbe6,
                MethodKind::Scn,
            ],
            h_values: vec![1.99, 2.0, 2.01, 2.5],
            t_final: 1000.0,
            p0: UnitPoint3::try_from_vec(Problem::StiffAttractor.default_start())
                .expect("registry start is unit"),
            harness: Harness::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityRun {
    pub method: MethodKind,
    pub h: f64,
    pub verdict: Verdict,
    pub times: Vec<f64>,
    /// Distance to the nearer of `±e₁`.
    pub distances: Vec<f64>,
    pub third_component: Vec<f64>,
    /// Grid steps that needed subdivision.
    pub retried_steps: Vec<usize>,
}

impl StabilityRun {
    pub fn tainted(&self) -> bool {
        !self.retried_steps.is_empty()
    }
}

fn attractor_distance(p: UnitPoint3) -> f64 {
    let v = p.vec();
    (v - Vec3::E1).norm().min((v + Vec3::E1).norm())
}

pub fn run_stability(cfg: &StabilityConfig) -> Result<Vec<StabilityRun>> {
    check_sweep(&cfg.methods, &cfg.h_values, cfg.t_final)?;
    let field = Problem::StiffAttractor.field();
    let harness = &cfg.harness;
    let jobs = sweep(&cfg.methods, &cfg.h_values);
    par::map(harness.execution, &jobs, |&(method, h)| {
        let steps = ((cfg.t_final / h) * (1.0 + 1e-12)).floor().max(1.0);
        let traj = harness.integrate(method, field.as_ref(), cfg.p0, steps * h, h)?;
        let distances: Vec<f64> = traj.states.iter().map(|p| attractor_distance(*p)).collect();
        Ok(StabilityRun {
            method,
            h,
            verdict: stability_verdict(&distances),
            times: traj.times.clone(),
            third_component: traj.states.iter().map(|p| p.z()).collect(),
            distances,
            retried_steps: traj.retries.iter().map(|r| r.step_index).collect(),
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_decay_converges() {
        let d: Vec<f64> = (0..100).map(|k| 0.4 * 0.5f64.powi(k)).collect();
        assert_eq!(stability_verdict(&d), Verdict::ConvergedToAttractor);
    }

    #[test]
    fn growth_diverges() {
        let d: Vec<f64> = (0..100).map(|k| 1e-3 * 1.1f64.powi(k)).collect();
        assert_eq!(stability_verdict(&d), Verdict::DivergedFromAttractor);
    }

    #[test]
    fn limit_cycle_diverges() {
        let mut d = vec![0.4, 0.3, 0.2];
        d.extend(std::iter::repeat_n(0.0865, 100));
        assert_eq!(stability_verdict(&d), Verdict::DivergedFromAttractor);
    }

    #[test]
    fn slow_decay_is_undetermined() {
        let d: Vec<f64> = (0..100).map(|k| 0.4 * 0.97f64.powi(k)).collect();
        assert_eq!(stability_verdict(&d), Verdict::Undetermined);
        assert_eq!(stability_verdict(&[0.1]), Verdict::Undetermined);
    }

    #[test]
    fn noise_at_the_rounding_floor_still_converges() {
        let mut d: Vec<f64> = (0..50).map(|k| 0.4 * 0.3f64.powi(k)).collect();
        d.extend((0..50).map(|k| if k % 2 == 0 { 1e-13 } else { 3e-13 }));
        assert_eq!(stability_verdict(&d), Verdict::ConvergedToAttractor);
    }

    #[test]
    fn random_start_is_reproducible_and_clear() {
        for seed in 0..200 {
            let p = random_start(seed);
            assert_eq!(p, random_start(seed));
            assert!((p.vec().norm() - 1.0).abs() < 1e-15);
            for a in [Vec3::E1, Vec3::E2, Vec3::E3] {
                assert!((p.vec() - a).norm() >= 0.1 && (p.vec() + a).norm() >= 0.1);
            }
        }
        assert_ne!(random_start(1), random_start(2));
    }

    #[test]
    fn sfe_threshold_on_the_attractor() {
        let cfg = StabilityConfig {
            methods: vec![MethodKind::Sfe],
            h_values: vec![1.99, 2.01],
            ..Default::default()
        };
        let runs = run_stability(&cfg).unwrap();
        assert_eq!(runs[0].verdict, Verdict::ConvergedToAttractor);
        assert_eq!(runs[1].verdict, Verdict::DivergedFromAttractor);
        assert_eq!(runs[0].times.len(), runs[0].distances.len());
        assert!((runs[1].times.last().unwrap() - 497.0 * 2.01).abs() < 1e-9);
    }
}
