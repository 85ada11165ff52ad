//! CSV output for trajectories and reports.
//!
//! Numbers are written with 17 significant digits (`{:.16e}`), which is
//! enough for an exact `f64` round trip. Output depends only on the data,
//! so identical runs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::integrators::Trajectory;

use super::{ConvergenceReport, HamiltonianReport, StabilityRun};

pub const TRAJECTORY_HEADER: &str = "t,x,y,z,norm_defect,newton_iters,energy_rel_err";
pub const CONVERGENCE_HEADER: &str = "h,e2_error";
pub const STABILITY_HEADER: &str = "n,t,distance,z";
pub const HAMILTONIAN_SUMMARY_HEADER: &str =
    "method,h,max_drift,final_drift,return_distance,return_time,tainted";

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// One row of the trajectory schema.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub norm_defect: f64,
    /// Blank for the initial state and for explicit steps.
    pub newton_iters: Option<usize>,
    /// Blank when the field has no conserved observable.
    pub energy_rel_err: Option<f64>,
}

pub fn trajectory_rows(traj: &Trajectory) -> Vec<TrajectoryRow> {
    let energy: Option<Vec<f64>> = traj.observable.as_ref().map(|obs| match obs.first() {
        Some(&h0) => obs.iter().map(|h| (h - h0).abs() / h0.abs()).collect(),
        None => Vec::new(),
    });
    traj.states
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let step = k.checked_sub(1).map(|i| &traj.steps[i]);
            TrajectoryRow {
                t: traj.times[k],
                x: p.x(),
                y: p.y(),
                z: p.z(),
                norm_defect: step.map_or((p.vec().norm() - 1.0).abs(), |s| s.norm_defect),
                newton_iters: step.and_then(|s| s.newton_iterations()),
                energy_rel_err: energy.as_ref().map(|e| e[k]),
            }
        })
        .collect()
}

pub fn rows_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in rows {
        let iters = r.newton_iters.map(|n| n.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            num(r.t),
            num(r.x),
            num(r.y),
            num(r.z),
            num(r.norm_defect),
            iters,
            opt_num(r.energy_rel_err)
        );
    }
    out
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    rows_csv(&trajectory_rows(traj))
}

fn field<T: std::str::FromStr>(line: usize, raw: &str, name: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::Csv {
        line,
        message: format!("bad {name} value `{raw}`"),
    })
}

fn optional<T: std::str::FromStr>(line: usize, raw: &str, name: &str) -> Result<Option<T>> {
    if raw.trim().is_empty() {
        Ok(None)
    } else {
        field(line, raw, name).map(Some)
    }
}

pub fn parse_trajectory(text: &str) -> Result<Vec<TrajectoryRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == TRAJECTORY_HEADER => {}
        _ => {
            return Err(Error::Csv {
                line: 1,
                message: format!("expected header `{TRAJECTORY_HEADER}`"),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let line = i + 1;
            let cols: Vec<&str> = l.split(',').collect();
            if cols.len() != 7 {
                return Err(Error::Csv {
                    line,
                    message: format!("expected 7 columns, found {}", cols.len()),
                });
            }
            Ok(TrajectoryRow {
                t: field(line, cols[0], "t")?,
                x: field(line, cols[1], "x")?,
                y: field(line, cols[2], "y")?,
                z: field(line, cols[3], "z")?,
                norm_defect: field(line, cols[4], "norm_defect")?,
                newton_iters: optional(line, cols[5], "newton_iters")?,
                energy_rel_err: optional(line, cols[6], "energy_rel_err")?,
            })
        })
        .collect()
}

/// One `# method=` block per series: header, `(h, E₂)` rows and a
/// `# slope=` trailer.
pub fn convergence_csv(report: &ConvergenceReport) -> String {
    let mut out = String::new();
    for (i, s) in report.series.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "# method={}", s.method);
        out.push_str(CONVERGENCE_HEADER);
        out.push('\n');
        for &(h, e) in &s.points {
            let _ = writeln!(out, "{},{}", num(h), num(e));
        }
        let _ = writeln!(out, "# slope={}", num(s.fit.slope));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedSeries {
    pub method: String,
    pub points: Vec<(f64, f64)>,
    pub slope: Option<f64>,
}

pub fn parse_convergence(text: &str) -> Result<Vec<ParsedSeries>> {
    let mut out: Vec<ParsedSeries> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l == CONVERGENCE_HEADER {
            continue;
        }
        let current = out.last_mut();
        if let Some(m) = l.strip_prefix("# method=") {
            out.push(ParsedSeries {
                method: m.to_string(),
                points: Vec::new(),
                slope: None,
            });
        } else if let Some(v) = l.strip_prefix("# slope=") {
            let s = current.ok_or_else(|| Error::Csv {
                line,
                message: "slope outside a method block".into(),
            })?;
            s.slope = Some(field(line, v, "slope")?);
        } else if l.starts_with('#') {
            continue;
        } else {
            let s = current.ok_or_else(|| Error::Csv {
                line,
                message: "data row outside a method block".into(),
            })?;
            let (h, e) = l.split_once(',').ok_or_else(|| Error::Csv {
                line,
                message: "expected `h,e2_error`".into(),
            })?;
            s.points
                .push((field(line, h, "h")?, field(line, e, "e2_error")?));
        }
    }
    Ok(out)
}

/// Distance-to-attractor and third-component traces, one block per run.
pub fn stability_csv(runs: &[StabilityRun]) -> String {
    let mut out = String::new();
    for (i, r) in runs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "# method={} h={} verdict={} retried_steps={}",
            r.method,
            num(r.h),
            r.verdict,
            r.retried_steps.len()
        );
        out.push_str(STABILITY_HEADER);
        out.push('\n');
        for (n, ((t, d), z)) in r
            .times
            .iter()
            .zip(&r.distances)
            .zip(&r.third_component)
            .enumerate()
        {
            let _ = writeln!(out, "{n},{},{},{}", num(*t), num(*d), num(*z));
        }
    }
    out
}

pub fn hamiltonian_summary_csv(report: &HamiltonianReport) -> String {
    let mut out = String::from(HAMILTONIAN_SUMMARY_HEADER);
    out.push('\n');
    for r in &report.runs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.method,
            num(r.h),
            num(r.max_drift),
            num(r.final_drift),
            opt_num(r.section.map(|s| s.distance)),
            opt_num(r.section.map(|s| s.time)),
            r.tainted()
        );
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn emit_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    write_file(path, &trajectory_csv(traj))
}

pub fn emit_convergence(report: &ConvergenceReport, path: &Path) -> Result<()> {
    write_file(path, &convergence_csv(report))
}
