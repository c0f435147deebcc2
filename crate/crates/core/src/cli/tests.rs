use super::*;

const EXAMPLE_ONE: &str = "\
# lattice trap
mode = ground
beta = 1000
potential = lattice
kappa = 100
domain = -16 16 -16 16
dt = 0.01
";

#[test]
fn beta_is_required_for_ground_mode() {
    match RunConfig::parse_str("mode = ground\n") {
        Err(ConfigError::Missing(key)) => assert_eq!(key, "beta"),
        other => panic!("{other:?}"),
    }
    let cfg = RunConfig::parse_str("mode = coupled\n").unwrap();
    assert_eq!(cfg.beta, None);
}

#[test]
fn dump_round_trips() {
    let cfg = RunConfig::parse_str(EXAMPLE_ONE).unwrap();
    assert_eq!(cfg.kappa, 100.0);
    assert_eq!(cfg.domain, [-16.0, 16.0, -16.0, 16.0]);
    let again = RunConfig::parse_str(&cfg.dump()).unwrap();
    assert_eq!(again, cfg);
    assert_eq!(again.dump(), cfg.dump());
}

#[test]
fn errors_name_the_key_and_line() {
    let err = RunConfig::parse_str("mode = ground\nbeta = 1\ndt = -0.1\n").unwrap_err();
    assert!(err.to_string().contains("`dt`"), "{err}");
    let err = RunConfig::parse_str("mode = ground\n\nbogus = 3\n").unwrap_err();
    assert!(matches!(err, ConfigError::UnknownKey { line: 3, .. }), "{err:?}");
    let err = RunConfig::parse_str("beta = x\n").unwrap_err();
    assert!(matches!(err, ConfigError::BadValue { line: 1, .. }), "{err:?}");
    let err = RunConfig::parse_str("beta 3\n").unwrap_err();
    assert!(matches!(err, ConfigError::Syntax { line: 1, .. }));
    let err = RunConfig::parse_str("beta = 1\nbeta = 2\n").unwrap_err();
    assert!(matches!(err, ConfigError::Duplicate { line: 2, .. }));
    let err = RunConfig::parse_str("beta = 1\ndomain = 1 0 0 1\n").unwrap_err();
    assert!(err.to_string().contains("`domain`"));
}

fn small_coupled() -> RunConfig {
    RunConfig::parse_str(
        "mode = coupled\ndomain = -5 5 -5 5\ngrid = 6\nomega1 = 1 1\nomega2 = 1 1\nv11 = 3\nv22 = 3\n\
         dt = 0.1\nmax_cycles = 3\nmax_dofs = 3000\nprobe = 11\n",
    )
    .unwrap()
}

#[test]
fn decoupled_identical_components_report_equal_energies() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions { out_dir: dir.path().to_path_buf(), ..RunOptions::default() };
    let rows = run(&small_coupled(), &opts).unwrap();
    assert_eq!(rows.len(), 3);
    assert!((rows[0].energy - rows[1].energy).abs() <= 1e-8 * rows[0].energy);
    assert!((rows[2].energy - rows[0].energy - rows[1].energy).abs() <= 1e-12 * rows[2].energy);
    for name in ["summary.csv", "history_psi1.csv", "solution_psi2.csv", "mesh_psi1.txt"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let history = std::fs::read_to_string(dir.path().join("history_psi1.csv")).unwrap();
    assert!(history.starts_with("step,t,E,mu,dofs,residual\n"));
}

#[test]
fn outputs_are_deterministic() {
    let cfg = RunConfig::parse_str(
        "mode = multi_state\nbeta = 10\nstates = g,x\ndomain = -6 6 -6 6\ngrid = 6\ndt = 0.1\nmax_cycles = 2\nprobe = 9\n",
    )
    .unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        run(&cfg, &RunOptions { out_dir: d.path().to_path_buf(), ..RunOptions::default() }).unwrap();
    }
    for name in ["summary.csv", "history_g.csv", "history_x.csv", "solution_x.csv", "mesh_g.txt"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let summary = std::fs::read_to_string(a.path().join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "label,E,mu,dofs");
    assert!(lines[1].starts_with("g,") && lines[2].starts_with("x,"));
}
