use std::fs;
use std::path::{Path, PathBuf};

use gamma_elliptic::{load_config, run, RunConfig, RunOptions, RunOutcome, Status, Task};
use serde_json::Value;

mod common;

fn run_named(task: Task, name: &str, out: &Path, deterministic: bool) -> RunOutcome {
    let cfg = load_config(&common::config_path(name)).unwrap();
    let opts = RunOptions {
        out: Some(out.to_path_buf()),
        deterministic,
        override_conditions: false,
    };
    let outcome = run(task, &cfg, &opts);
    common::validate_json(&outcome.files);
    outcome
}

fn file(outcome: &RunOutcome, name: &str) -> PathBuf {
    outcome
        .files
        .iter()
        .find(|p| p.file_name().unwrap() == name)
        .unwrap_or_else(|| panic!("{name} not written: {:?}", outcome.files))
        .clone()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn mesh_task_writes_icosahedral_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_named(Task::Mesh, "sphere-mesh", dir.path(), false);
    assert_eq!(o.status, Status::Ok, "{}", o.message);
    let vtk = fs::read_to_string(file(&o, "mesh.vtk")).unwrap();
    let header = |key: &str| -> usize {
        let line = vtk.lines().find(|l| l.starts_with(key)).unwrap();
        line.split_whitespace().nth(1).unwrap().parse().unwrap()
    };
    assert_eq!(header("POINTS"), 42);
    assert_eq!(header("POLYGONS"), 80);
    let tri_rows = fs::read_to_string(file(&o, "triangles.csv")).unwrap().lines().count() - 1;
    assert_eq!(tri_rows, 80);
    let m = json(&file(&o, "mesh.json"));
    assert_eq!(m["mesh"]["euler_characteristic"], 2);
}

/// Least-squares slope of log e against log h, computed from the CSV alone.
fn csv_rate(csv: &str, column: &str) -> f64 {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let hi = header.iter().position(|c| *c == "h").unwrap();
    let ei = header.iter().position(|c| *c == column).unwrap();
    let pts: Vec<(f64, f64)> = lines
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            (f[hi].ln(), f[ei].ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn study_task_on_sphere_eigencase() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_named(Task::Study, "sphere-study", dir.path(), true);
    assert_eq!(o.status, Status::Ok, "{}", o.message);
    let csv = fs::read_to_string(file(&o, "study.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let rate = csv_rate(&csv, "error_l2");
    assert!((1.9..=2.1).contains(&rate), "{rate}");
    let report = json(&file(&o, "study.json"));
    assert_eq!(report["report"]["passed"], true);
    assert!((report["report"]["rate_l2"].as_f64().unwrap() - rate).abs() < 1e-12);
}

#[test]
fn deterministic_runs_are_bitwise_identical() {
    for (task, name, csv) in [
        (Task::Study, "sphere-study", "study.csv"),
        (Task::Solve, "divfree-solve", "solution.csv"),
    ] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let oa = run_named(task, name, a.path(), true);
        let ob = run_named(task, name, b.path(), true);
        assert_eq!(oa.status, Status::Ok);
        assert_eq!(ob.status, Status::Ok);
        assert_eq!(
            fs::read(file(&oa, csv)).unwrap(),
            fs::read(file(&ob, csv)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn check_task_flags_degenerate_reaction() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_named(Task::Check, "degenerate-check", dir.path(), false);
    assert_eq!(o.status, Status::ConditionsViolated);
    assert!(o.message.contains("reaction"), "{}", o.message);
    let report = json(&file(&o, "conditions.json"));
    assert_eq!(report["violated"], true);
    assert_eq!(report["conditions"]["reaction_with_b"]["verdict"], "violated");
    assert_eq!(report["conditions"]["reaction_with_c"]["verdict"], "violated");

    let cfg = load_config(&common::config_path("degenerate-check")).unwrap();
    let opts = RunOptions {
        out: Some(dir.path().join("override")),
        deterministic: false,
        override_conditions: true,
    };
    let o = run(Task::Check, &cfg, &opts);
    assert_eq!(o.status, Status::Ok);
    common::validate_json(&o.files);
    assert_eq!(json(&file(&o, "conditions.json"))["overridden"], true);
}

#[test]
fn solve_refuses_degenerate_problem() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_named(Task::Solve, "degenerate-check", dir.path(), false);
    assert_eq!(o.status, Status::ConditionsViolated);
    assert!(o.files.iter().any(|f| f.ends_with("conditions.json")));
    assert!(!o.files.iter().any(|f| f.ends_with("solution.csv")));
}

#[test]
fn check_flags_non_solenoidal_convection() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[surface]\nkind = \"sphere\"\nresolution = 2\n[problem]\nkind = \"div-free\"\nload = \"2*x3\"\n\
                [coefficients]\nc = [\"0\", \"0\", \"1\"]\n";
    let cfg = RunConfig::from_toml(text).unwrap();
    let opts = RunOptions {
        out: Some(dir.path().to_path_buf()),
        ..RunOptions::default()
    };
    let o = run(Task::Check, &cfg, &opts);
    assert_eq!(o.status, Status::ConditionsViolated);
    common::validate_json(&o.files);
    let o = run(Task::Solve, &cfg, &opts);
    assert_eq!(o.status, Status::ConditionsViolated, "{}", o.message);
}

#[test]
fn solve_task_reports_errors_against_exact_solution() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_named(Task::Solve, "torus-general", dir.path(), true);
    assert_eq!(o.status, Status::Ok, "{}", o.message);
    let report = json(&file(&o, "solve.json"));
    let l2 = report["errors"]["l2"].as_f64().unwrap();
    assert!(l2 > 0.0 && l2 < 0.1, "{l2}");
    assert_eq!(report["solve"]["seconds"], 0.0);
    // the CSV columns u and exact agree to discretization accuracy
    let csv = fs::read_to_string(file(&o, "solution.csv")).unwrap();
    let worst = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            (f[4] - f[5]).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 0.2, "{worst}");
}

fn read_market(path: &Path) -> (usize, usize, Vec<(usize, usize, f64)>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('%'));
    let dims: Vec<usize> = lines
        .next()
        .unwrap()
        .split_whitespace()
        .map(|v| v.parse().unwrap())
        .collect();
    let entries = lines
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (
                f[0].parse::<usize>().unwrap() - 1,
                f[1].parse::<usize>().unwrap() - 1,
                f[2].parse().unwrap(),
            )
        })
        .collect();
    (dims[0], dims[1], entries)
}

#[test]
fn export_task_writes_matrix_market() {
    let dir = tempfile::tempdir().unwrap();
    let text =
        "[surface]\nkind = \"sphere\"\nresolution = 2\n[problem]\nkind = \"laplace-beltrami\"\nload = \"2*x3\"\n";
    let cfg = RunConfig::from_toml(text).unwrap();
    let opts = RunOptions {
        out: Some(dir.path().to_path_buf()),
        deterministic: true,
        override_conditions: false,
    };
    let o = run(Task::Export, &cfg, &opts);
    assert_eq!(o.status, Status::Ok, "{}", o.message);
    common::validate_json(&o.files);
    let (n, m, k) = read_market(&file(&o, "operator.mtx"));
    assert_eq!((n, m), (162, 162));
    // stiffness rows sum to zero, the mass matrix sums to the mesh area
    let mut rows = vec![0.0; n];
    for &(i, _, v) in &k {
        rows[i] += v;
    }
    assert!(rows.iter().all(|r| r.abs() < 1e-12));
    let (_, _, mass) = read_market(&file(&o, "mass.mtx"));
    let area = json(&file(&o, "export.json"))["mesh"]["area"].as_f64().unwrap();
    let total: f64 = mass.iter().map(|e| e.2).sum();
    assert!((total - area).abs() < 1e-12 * area);
    let constraint = fs::read_to_string(file(&o, "constraint.mtx")).unwrap();
    let c: f64 = constraint.lines().skip(2).map(|l| l.parse::<f64>().unwrap()).sum();
    assert!((c - area).abs() < 1e-12 * area);
}

#[test]
fn biharmonic_and_torus_studies() {
    for name in ["biharmonic-study", "torus-general"] {
        let dir = tempfile::tempdir().unwrap();
        let o = run_named(Task::Study, name, dir.path(), false);
        assert_eq!(o.status, Status::Ok, "{name}: {}", o.message);
        assert_eq!(json(&file(&o, "study.json"))["report"]["passed"], true, "{name}");
    }
}

#[test]
fn study_without_exact_solution_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_named(Task::Study, "degenerate-check", dir.path(), false);
    assert_eq!(o.status, Status::ParseError, "{}", o.message);
}
