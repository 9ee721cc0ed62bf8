use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use amg_cli::report::{from_json, levels_from_csv, LevelRow, SolveReport, SCHEMA_VERSION};

fn amg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amg"))
        .args(args)
        .env_remove("AMG_SOLVER")
        .output()
        .expect("run amg")
}

fn recipe(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../recipes").join(name)
}

fn golden(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(p).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn solve_generated_poisson() {
    let o = amg(&[
        "solve",
        "--gen",
        "poisson7:16,16,16",
        "--interp",
        "extended-i",
        "--smoother",
        "jacobi",
        "--soc",
        "classical",
        "--theta",
        "0.25",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = from_json(&stdout(&o)).unwrap();
    assert!(r.converged);
    assert_eq!(r.n, 4096);
    assert!(r.iterations <= 30);
}

#[test]
fn solve_matrix_file_with_bamg_recipe() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("beam.mtx");
    let xyz = dir.path().join("beam.xyz.mtx");
    let o = amg(&[
        "gen",
        "elasticity:12,4,4",
        "-o",
        a.to_str().unwrap(),
        "--coords",
        xyz.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = dir.path().join("report.json");
    let history = dir.path().join("history.csv");
    let o = amg(&[
        "solve",
        "--matrix",
        a.to_str().unwrap(),
        "--coords",
        xyz.to_str().unwrap(),
        "--recipe",
        recipe("bamg-elasticity.toml").to_str().unwrap(),
        "--format",
        "json",
        "--report",
        report.to_str().unwrap(),
        "--history",
        history.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = from_json(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(r.converged);
    assert_eq!(r.n, 3 * 12 * 5 * 5);
    let h = std::fs::read_to_string(&history).unwrap();
    assert!(h.starts_with("iteration,relative_residual\n"));
    assert_eq!(h.lines().count(), r.iterations + 2);
}

#[test]
fn pcg_with_operator_filtering_is_rejected() {
    let o = amg(&[
        "solve",
        "--gen",
        "poisson7:8,8,8",
        "--recipe",
        recipe("filtered-operator.toml").to_str().unwrap(),
        "--solver",
        "pcg",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no more guaranteed to be SPD"), "{}", stderr(&o));

    let o = amg(&[
        "solve",
        "--gen",
        "poisson7:8,8,8",
        "--recipe",
        recipe("filtered-operator.toml").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("bicgstab"));
}

#[test]
fn not_converged_exit_code() {
    let o = amg(&["solve", "--gen", "poisson7:12,12,12", "--max-iters", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn errors_exit_with_one() {
    let o = amg(&["solve", "--gen", "poisson7:8,8,8", "--set", "colour=blue"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown key"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[smoother]\nnu1 = 1\nnu2 = = 2\n").unwrap();
    let o = amg(&["solve", "--gen", "poisson7:8,8,8", "--recipe", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = amg(&["solve", "--matrix", "/nonexistent/a.mtx"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn env_overrides_recipe_and_flags_override_env() {
    let base = ["solve", "--gen", "poisson7:8,8,8", "--format", "json"];
    let run = |env: &[(&str, &str)], extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_amg"));
        c.args(base).args(extra);
        for (k, v) in env {
            c.env(k, v);
        }
        let o = c.output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        from_json(&stdout(&o)).unwrap()
    };
    assert_eq!(run(&[("AMG_SOLVER", "bicgstab")], &[]).solver, "bicgstab");
    assert_eq!(run(&[("AMG_SOLVER", "bicgstab")], &["--solver", "pcg"]).solver, "pcg");
}

#[test]
fn same_seed_same_report() {
    let args = ["solve", "--gen", "heterogeneous:24,24,1000,3", "--format", "json", "--threads", "1"];
    let a = from_json(&stdout(&amg(&args))).unwrap();
    let mut args4 = args;
    args4[6] = "4";
    let b = from_json(&stdout(&amg(&args4))).unwrap();
    assert_eq!(a.without_times(), b.without_times());
}

#[test]
fn inspect_prints_levels() {
    let o = amg(&["inspect", "--gen", "poisson7:12,12,12"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("level        rows"));
    assert!(out.contains("operator complexity"));
}

#[test]
fn gen_rejects_coords_for_scalar_problems() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("p.mtx");
    let c = dir.path().join("p.xyz");
    let o = amg(&["gen", "poisson7:3,3,3", "-o", a.to_str().unwrap(), "--coords", c.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

fn fixture() -> SolveReport {
    SolveReport {
        schema_version: SCHEMA_VERSION,
        problem: "poisson7:16,16,16".into(),
        n: 4096,
        nnz: 27136,
        solver: "pcg".into(),
        converged: true,
        iterations: 12,
        rel_residual: 4.25e-9,
        c_gd: 1.3798828125,
        c_op: 3.7498525943396226,
        setup_time: 0.031,
        solve_time: 0.017,
        total_time: 0.048,
        orphans: 0,
        levels: vec![
            LevelRow {
                level: 0,
                n: 4096,
                nnz: 27136,
                ratio: None,
            },
            LevelRow {
                level: 1,
                n: 1331,
                nnz: 52817,
                ratio: Some(0.324951171875),
            },
            LevelRow {
                level: 2,
                n: 225,
                nnz: 21805,
                ratio: Some(0.16904583020285496),
            },
        ],
        history: Vec::new(),
    }
}

#[test]
fn report_golden_files() {
    let r = fixture();
    assert_eq!(r.to_text(), golden("report.txt"));
    assert_eq!(r.to_json(), golden("report.json"));
    assert_eq!(r.to_csv(), golden("report.csv"));
    assert_eq!(levels_from_csv(&golden("report.csv")).unwrap(), r.levels);
}

