use sphere_ivp::experiments::csv::{
    convergence_csv, hamiltonian_summary_csv, parse_convergence, parse_trajectory, stability_csv,
    trajectory_csv, CONVERGENCE_HEADER, HAMILTONIAN_SUMMARY_HEADER, STABILITY_HEADER,
};
use sphere_ivp::experiments::{
    random_start, run_convergence, run_hamiltonian, run_stability, ConvergenceConfig,
    HamiltonianConfig, Harness, StabilityConfig, Verdict,
};
use sphere_ivp::geometry::UnitPoint3;
use sphere_ivp::integrators::{integrate, MethodKind};
use sphere_ivp::par::Execution;
use sphere_ivp::problems::Problem;

fn harness(execution: Execution) -> Harness {
    Harness {
        execution,
        ..Default::default()
    }
}

fn small_convergence(execution: Execution) -> ConvergenceConfig {
    ConvergenceConfig {
        h_values: vec![0.2, 0.1, 0.05, 0.025, 0.0125],
        harness: harness(execution),
        ..Default::default()
    }
}

#[test]
fn convergence_output_is_reproducible_across_modes() {
    let a = convergence_csv(&run_convergence(&small_convergence(Execution::Parallel)).unwrap());
    let b = convergence_csv(&run_convergence(&small_convergence(Execution::Parallel)).unwrap());
    let c = convergence_csv(&run_convergence(&small_convergence(Execution::Sequential)).unwrap());
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn convergence_report_layout() {
    let report = run_convergence(&small_convergence(Execution::Parallel)).unwrap();
    let text = convergence_csv(&report);
    assert_eq!(text.matches(CONVERGENCE_HEADER).count(), 4);
    let parsed = parse_convergence(&text).unwrap();
    assert_eq!(parsed.len(), 4);
    for (p, s) in parsed.iter().zip(&report.series) {
        assert_eq!(p.method, s.method.key());
        assert_eq!(p.points.len(), 5);
        assert_eq!(p.points, s.points);
        assert_eq!(p.slope, Some(s.fit.slope));
    }
}

#[test]
fn trajectory_rows_stay_on_the_sphere() {
    for problem in Problem::ALL {
        let field = problem.field();
        let p0 = UnitPoint3::try_from_vec(problem.default_start()).unwrap();
        for m in MethodKind::ALL {
            let Ok(traj) = integrate(m, field.as_ref(), p0, 0.0, 2.0, 0.05) else {
                continue;
            };
            let text = trajectory_csv(&traj);
            let rows = parse_trajectory(&text).unwrap();
            assert_eq!(rows.len(), traj.len());
            for r in &rows {
                assert!(r.norm_defect <= 1e-12, "{problem} {m}: {}", r.norm_defect);
                let n = (r.x * r.x + r.y * r.y + r.z * r.z).sqrt();
                assert!((n - 1.0).abs() <= 1e-12);
            }
            assert_eq!(rows[0].newton_iters, None);
            if m.is_implicit() {
                assert!(rows[1..].iter().all(|r| r.newton_iters.is_some()));
            }
            let has_energy = field.hamiltonian(p0.vec()).is_some();
            assert_eq!(rows[1].energy_rel_err.is_some(), has_energy);
        }
    }
}

#[test]
fn stability_output_matches_across_modes() {
    let cfg = |execution| StabilityConfig {
        methods: vec![MethodKind::Sfe, MethodKind::Scn],
        h_values: vec![1.99, 2.01],
        t_final: 200.0,
        p0: random_start(4),
        harness: harness(execution),
    };
    let par = run_stability(&cfg(Execution::Parallel)).unwrap();
    let seq = run_stability(&cfg(Execution::Sequential)).unwrap();
    assert_eq!(par, seq);
    let text = stability_csv(&par);
    assert_eq!(text.matches(STABILITY_HEADER).count(), 4);
    assert!(text.contains("# method=scn h=2.0099999999999998e0 verdict=converged-to-attractor"));
    let scn = par
        .iter()
        .find(|r| r.method == MethodKind::Scn && r.h == 2.01)
        .unwrap();
    assert_eq!(scn.verdict, Verdict::ConvergedToAttractor);
}

#[test]
fn hamiltonian_summary_lists_every_run() {
    let cfg = HamiltonianConfig {
        h_values: vec![0.5, 1.0],
        t_final: 50.0,
        ..HamiltonianConfig::for_problem(Problem::RigidBody)
    };
    let report = run_hamiltonian(&cfg).unwrap();
    assert!(!report.tainted());
    let text = hamiltonian_summary_csv(&report);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HAMILTONIAN_SUMMARY_HEADER));
    assert_eq!(lines.count(), 4);
    let scn = report.run(MethodKind::Scn, 0.5).unwrap();
    assert!(scn.max_drift < 1e-12);
    assert_eq!(scn.drift.len(), scn.trajectory.len());
}

#[test]
fn top_start_can_be_overridden() {
    let p0 = UnitPoint3::new(0.0, 0.8, 0.6).unwrap();
    let cfg = HamiltonianConfig {
        methods: vec![MethodKind::Scn],
        h_values: vec![0.25],
        t_final: 40.0,
        p0,
        ..HamiltonianConfig::for_problem(Problem::PerturbedTop)
    };
    let report = run_hamiltonian(&cfg).unwrap();
    assert_eq!(report.runs[0].trajectory.states[0], p0);
}
