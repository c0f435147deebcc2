//! Runs the `solver` binary end to end.

use std::fs;
use std::path::Path;
use std::process::Command;

const SMALL: &str = "mode = multi_state
beta = 20
potential = harmonic
domain = -6 6 -6 6
grid = 8
states = g,x
dt = 0.1
max_cycles = 3
max_dofs = 3000
probe = 11
";

fn solver(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_solver")).current_dir(dir).args(args).output().unwrap()
}

#[test]
fn writes_summary_history_solution_and_mesh_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), SMALL).unwrap();
    let out = solver(dir.path(), &["run.cfg", "--out", "res"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 2);

    let res = dir.path().join("res");
    let summary = fs::read_to_string(res.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("label,E,mu,dofs"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), ["g", "x"]);
    let energy = |r: &Vec<&str>| r[1].parse::<f64>().unwrap();
    assert!(energy(&rows[0]) < energy(&rows[1]));

    for label in ["g", "x"] {
        let history = fs::read_to_string(res.join(format!("history_{label}.csv"))).unwrap();
        assert!(history.starts_with("step,t,E,mu,dofs,residual\n"));
        assert!(history.lines().count() > 10);
        let solution = fs::read_to_string(res.join(format!("solution_{label}.csv"))).unwrap();
        assert_eq!(solution.lines().count(), 1 + 11 * 11);
        assert!(res.join(format!("mesh_{label}.txt")).exists());
    }
}

#[test]
fn single_mesh_flag_shares_the_mesh() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), SMALL).unwrap();
    let out = solver(dir.path(), &["run.cfg", "--out", "res", "--single-mesh"]);
    assert!(out.status.success());
    let summary = fs::read_to_string(dir.path().join("res/summary.csv")).unwrap();
    let dofs: Vec<&str> = summary.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(dofs[0], dofs[1]);
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), SMALL).unwrap();
    let out = solver(dir.path(), &["run.cfg", "--dump-config"]);
    assert!(out.status.success());
    let dumped = String::from_utf8(out.stdout).unwrap();
    fs::write(dir.path().join("again.cfg"), &dumped).unwrap();
    let again = solver(dir.path(), &["again.cfg", "--dump-config"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), dumped);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), "mode = ground\nbeta = 1\nwidth = 3\n").unwrap();
    let out = solver(dir.path(), &["bad.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("width") && err.contains('3'), "{err}");

    let missing = solver(dir.path(), &["nope.cfg"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), SMALL).unwrap();
    let seq = solver(dir.path(), &["run.cfg", "--out", "a"]);
    let par = Command::new(env!("CARGO_BIN_EXE_solver"))
        .current_dir(dir.path())
        .args(["run.cfg", "--out", "b"])
        .env("SOLVER_THREADS", "2")
        .output()
        .unwrap();
    assert!(seq.status.success() && par.status.success());
    let read = |d: &str| fs::read_to_string(dir.path().join(d).join("summary.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn linear_ground_state_runs_without_thomas_fermi() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "mode = ground\nbeta = 0\ndomain = -6 6 -6 6\ngrid = 8\ndt = 0.1\nmax_cycles = 4\n";
    fs::write(dir.path().join("lin.cfg"), cfg).unwrap();
    let out = solver(dir.path(), &["lin.cfg", "--out", "res"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("res/summary.csv")).unwrap();
    let e: f64 = summary.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((e - 1.0).abs() < 1e-3, "{e}");
}
