use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::geometry::UnitPoint3;
use crate::newton::{NewtonConfig, NewtonStats};

use super::{step, MethodKind, StepResult};

/// A uniformly stepped solution. `steps[k]` produced `states[k + 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub method: MethodKind,
    pub h: f64,
    pub times: Vec<f64>,
    pub states: Vec<UnitPoint3>,
    pub steps: Vec<StepResult>,
    /// Conserved observable evaluated at every state, when the field has one.
    pub observable: Option<Vec<f64>>,
    pub retries: Vec<RetryEvent>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn final_state(&self) -> Option<UnitPoint3> {
        self.states.last().copied()
    }

    /// True when any step had to be subdivided to succeed.
    pub fn tainted(&self) -> bool {
        !self.retries.is_empty()
    }

    pub fn newton_iterations(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().filter_map(|s| s.newton_iterations())
    }
}

/// A grid step that only succeeded after subdivision.
#[derive(Clone, Debug, PartialEq)]
pub struct RetryEvent {
    pub step_index: usize,
    /// Number of halvings applied (substeps = 2^halvings).
    pub halvings: u32,
    pub error: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IntegrateOptions {
    pub newton: NewtonConfig,
    /// On failure, retry the step with `h/2`, then `h/4`, ... at most this
    /// many times.
    pub max_halvings: u32,
}

/// Step sizes landing exactly on `t_final`; all but possibly the last equal
/// `h`.
fn grid(t0: f64, t_final: f64, h: f64) -> Vec<f64> {
    let ratio = (t_final - t0) / h;
    let n_full = ratio.round();
    let n = if (ratio - n_full).abs() <= 1e-9 * ratio.max(1.0) {
        n_full as usize
    } else {
        ratio.ceil() as usize
    };
    let mut times: Vec<f64> = (0..n).map(|k| t0 + k as f64 * h).collect();
    times.push(t_final);
    times
}

pub fn integrate<F: VectorField + ?Sized>(
    method: MethodKind,
    field: &F,
    p0: UnitPoint3,
    t0: f64,
    t_final: f64,
    h: f64,
) -> Result<Trajectory> {
    integrate_with(
        method,
        field,
        p0,
        t0,
        t_final,
        h,
        &IntegrateOptions::default(),
    )
}

fn substeps<F: VectorField + ?Sized>(
    method: MethodKind,
    field: &F,
    p: UnitPoint3,
    t: f64,
    dt: f64,
    halvings: u32,
    cfg: &NewtonConfig,
) -> Result<StepResult> {
    let count = 1usize << halvings;
    let sub = dt / count as f64;
    let mut state = p;
    let mut iterations = 0;
    let mut defect: f64 = 0.0;
    let mut last = None;
    for k in 0..count {
        let r = step(method, field, state, t + k as f64 * sub, sub, cfg)?;
        iterations += r.newton_iterations().unwrap_or(0);
        defect = defect.max(r.norm_defect);
        state = r.next_state;
        last = Some(r);
    }
    let mut r = last.expect("at least one substep");
    r.norm_defect = defect;
    r.newton = r.newton.map(|s| NewtonStats { iterations, ..s });
    Ok(r)
}

/// Integrate from `t0` to `t_final` with step `h`; the last step is shortened
/// to land on `t_final`.
pub fn integrate_with<F: VectorField + ?Sized>(
    method: MethodKind,
    field: &F,
    p0: UnitPoint3,
    t0: f64,
    t_final: f64,
    h: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    let valid = h > 0.0 && h.is_finite() && t0.is_finite() && t_final.is_finite() && t_final > t0;
    if !valid {
        return Err(Error::InvalidInput(format!(
            "need h > 0 and t_final > t0, got h = {h}, [{t0}, {t_final}]"
        )));
    }
    let times = grid(t0, t_final, h);
    let mut states = Vec::with_capacity(times.len());
    let mut steps = Vec::with_capacity(times.len() - 1);
    let mut retries = Vec::new();
    states.push(p0);

    for (index, w) in times.windows(2).enumerate() {
        let (t, dt) = (w[0], w[1] - w[0]);
        let p = states[index];
        let result = match step(method, field, p, t, dt, &opts.newton) {
            Ok(r) => r,
            Err(first) => {
                let mut recovered = None;
                for halvings in 1..=opts.max_halvings {
                    if let Ok(r) = substeps(method, field, p, t, dt, halvings, &opts.newton) {
                        retries.push(RetryEvent {
                            step_index: index,
                            halvings,
                            error: first.to_string(),
                        });
                        recovered = Some(r);
                        break;
                    }
                }
                recovered.ok_or_else(|| Error::StepFailed {
                    index,
                    source: Box::new(first),
                })?
            }
        };
        states.push(result.next_state);
        steps.push(result);
    }

    let observable = states
        .iter()
        .map(|p| field.hamiltonian(p.vec()))
        .collect::<Option<Vec<f64>>>();

    Ok(Trajectory {
        method,
        h,
        times,
        states,
        steps,
        observable,
        retries,
    })
}
