mod common;

use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};

use common::{highs_config, seeded, GenParams};
use geomsched::grid::build_grid;
use geomsched::mip::{build_model, build_orig_at, FormulationKind};
use geomsched::model::SolveStatus;
use geomsched::solver::{solve_bruteforce, solve_external, SolveError, SolverConfig};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn highs_agrees_with_exhaustive_search() {
    let Some(cfg) = highs_config() else { return };
    for seed in 0..24u64 {
        let inst = seeded(seed, &GenParams::default());
        let eps = [0.3, 0.7, 1.0][seed as usize % 3];
        let grid = build_grid(eps, inst.horizon).unwrap();
        for kind in [FormulationKind::OrigAt, FormulationKind::AggAt, FormulationKind::AggBy] {
            let model = build_model(&inst, kind, &grid).unwrap();
            let ext = solve_external(&model, &cfg).unwrap();
            let brute = solve_bruteforce(&inst, kind, Some(&grid)).unwrap();
            assert_eq!(ext.status, SolveStatus::Optimal);
            assert!(close(ext.objective, brute.objective), "seed {seed} {kind}: {} vs {}", ext.objective, brute.objective);
            // Recomputed from the model, not taken from the solver.
            assert_eq!(ext.objective, model.objective_value(&ext.dense(&model)));
        }
    }
}

/// A stand-in solver: a shell script that writes `body` and exits with `code`.
fn fake_solver(dir: &Path, body: &str, code: i32) -> SolverConfig {
    let script: PathBuf = dir.join("solver.sh");
    std::fs::write(&script, format!("#!/bin/sh\nprintf '{body}' > \"$2\"\nexit {code}\n")).unwrap();
    std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
    SolverConfig::new(format!("{} {{model}} {{solution}}", script.display()), 5.0, 0.0).unwrap()
}

fn small_model() -> geomsched::mip::MipModel {
    build_orig_at(&seeded(3, &GenParams { max_jobs: 2, ..GenParams::default() })).unwrap()
}

#[test]
fn exit_codes_map_to_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let model = small_model();
    let cases = [(0, SolveStatus::Optimal), (10, SolveStatus::Infeasible), (11, SolveStatus::TimeLimit), (12, SolveStatus::Feasible)];
    for (code, status) in cases {
        let sol = solve_external(&model, &fake_solver(dir.path(), "", code)).unwrap();
        assert_eq!(sol.status, status, "exit {code}");
        assert_eq!(sol.objective, 0.0);
    }
}

#[test]
fn near_binary_values_are_rounded() {
    let dir = tempfile::tempdir().unwrap();
    let model = small_model();
    let name = &model.vars[0].name;
    let sol = solve_external(&model, &fake_solver(dir.path(), &format!("{name} 0.99999\\n"), 0)).unwrap();
    assert_eq!(sol.values.get(name), Some(&1.0));
    assert_eq!(sol.objective, model.objective[0].1);
}

#[test]
fn bad_solutions_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let model = small_model();
    let err = solve_external(&model, &fake_solver(dir.path(), "nosuchvar 1\\n", 0)).unwrap_err();
    assert!(matches!(err, SolveError::SolutionFormat { line: 1, .. }), "{err}");
    let name = &model.vars[0].name;
    let err = solve_external(&model, &fake_solver(dir.path(), &format!("{name} 0.5\\n"), 0)).unwrap_err();
    assert!(matches!(err, SolveError::SolutionFormat { .. }), "{err}");
}

#[test]
fn crashes_keep_the_work_directory() {
    let dir = tempfile::tempdir().unwrap();
    let err = solve_external(&small_model(), &fake_solver(dir.path(), "", 3)).unwrap_err();
    match err {
        SolveError::Failed { code: Some(3), dir: kept, .. } => {
            assert!(kept.join("model.lp").exists());
            std::fs::remove_dir_all(kept).unwrap();
        }
        other => panic!("unexpected {other}"),
    }
}
