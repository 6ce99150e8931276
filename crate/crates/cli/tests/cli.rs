use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ipdhg_cli::commands::compare;
use ipdhg_cli::RawConfig;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn ipdhg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipdhg"))
        .args(args)
        .env_remove("IPDHG_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_fixture_converges_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("tvl1_8x8.cfg");
    let o = ipdhg(&["solve", "-c", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("status,outer_iters,time_s,final_delta\nconverged,"), "{out}");
    for f in ["trace.csv", "solution.csv", "solution.pgm", "summary.csv"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.lines().count() > 1);
}

#[test]
fn unreadable_input_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ipdhg(&[
        "solve",
        "--problem",
        "tvl1",
        "--input",
        "/nonexistent/img.pgm",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 4);
}

#[test]
fn missing_config_file_is_io_error() {
    let o = ipdhg(&["solve", "-c", "/nonexistent/run.cfg"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn single_iteration_is_not_converged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("tvl1_8x8.cfg");
    let o = ipdhg(&[
        "solve",
        "-c",
        cfg.to_str().unwrap(),
        "--max-outer",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("not_converged,1,"));
}

#[test]
fn config_errors_exit_three_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "problem=tvl1\ninput=x.pgm\nalgorithm=pdhg\ninner=bcd\n").unwrap();
    let o = ipdhg(&["solve", "-c", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));

    std::fs::write(&cfg, "").unwrap();
    let o = ipdhg(&["solve", "-c", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing required key `problem`"));
}

#[test]
fn solve_rejects_sweeps() {
    let o = ipdhg(&["solve", "--problem", "tvl1", "--synthetic", "phantom", "--tau", "1,0.1"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn traces_are_byte_identical_without_time() {
    let cfg = fixture("tvl1_8x8.cfg");
    let mut traces = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let o = ipdhg(&["solve", "-c", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        traces.push(std::fs::read(dir.path().join("trace.csv")).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn synthetic_seeded_runs_are_deterministic() {
    let mut traces = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let o = ipdhg(&[
            "solve",
            "--problem",
            "graphcut",
            "--synthetic",
            "blobs",
            "--seed",
            "7",
            "--set",
            "size=12",
            "--set",
            "trace_time=false",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(dir.path().join("mask.pgm").is_file());
        traces.push(std::fs::read(dir.path().join("trace.csv")).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn env_var_sets_output_dir_and_flag_wins() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let cfg = fixture("tvl1_8x8.cfg");
    let run = |extra: &[&str]| {
        let mut args = vec!["solve", "-c", cfg.to_str().unwrap()];
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_ipdhg"))
            .args(&args)
            .env("IPDHG_OUTPUT_DIR", env_dir.path())
            .output()
            .unwrap()
    };
    assert_eq!(code(&run(&[])), 0);
    assert!(env_dir.path().join("trace.csv").is_file());
    assert_eq!(code(&run(&["--out", flag_dir.path().to_str().unwrap()])), 0);
    assert!(flag_dir.path().join("trace.csv").is_file());
}

#[test]
fn compare_sweep_has_one_row_per_setting() {
    let mut raw = RawConfig::parse(
        "problem=tvl1\nsynthetic=checkerboard\nsize=8\nalgorithm=iprepdhg,pdhg\n\
         tau=10,1,0.1,0.01,0.001\np=1,2,3\ntol=1e-4\nmax_outer=2000\n",
    )
    .unwrap();
    raw.set("trace_time", "false");
    let (rows, traces) = compare(&raw, 4).unwrap();
    assert_eq!(rows.len(), 20);
    assert_eq!(traces.len(), 20);
    assert_eq!(rows.iter().filter(|r| r.method == "iprepdhg").count(), 15);
    assert_eq!(rows.iter().filter(|r| r.method == "pdhg").count(), 5);
    for m in ["iprepdhg", "pdhg"] {
        let best = rows.iter().filter(|r| r.method == m && r.best).count();
        assert!(best <= 1);
    }
    // every row's parameters reproduce it through solve
    for r in &rows {
        let mut single = RawConfig::parse("problem=tvl1\nsynthetic=checkerboard\nsize=8\n").unwrap();
        let pairs: Vec<(&str, &str)> = r.params.split(' ').map(|kv| kv.split_once('=').unwrap()).collect();
        single.apply_flags(pairs).unwrap();
        assert!(!single.is_sweep());
        assert_eq!(single.solver_params(), r.params);
    }
}

#[test]
fn compare_cli_writes_table_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let o = ipdhg(&[
        "compare",
        "--problem",
        "tvl1",
        "--synthetic",
        "checkerboard",
        "--set",
        "size=8",
        "--algorithm",
        "pdhg,dp-pdhg,iprepdhg",
        "--tau",
        "1,0.1",
        "--tol",
        "1e-4",
        "--jobs",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 2 + 1 + 2);
    assert!(table.starts_with("run,method,params,"));
    assert!(dir.path().join("trace_000.csv").is_file());
}

#[test]
fn compare_needs_two_configs() {
    let o = ipdhg(&["compare", "--problem", "tvl1", "--synthetic", "phantom", "--tau", "0.1"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn compare_records_failing_rows() {
    // sigma too large for tau=10: that row errors, the others still run
    let raw = RawConfig::parse(
        "problem=tvl1\nsynthetic=checkerboard\nsize=8\nalgorithm=pdhg\ntau=10,0.1\nsigma=1\nphi_star=0\ntol=1e-3\nmax_outer=50\n",
    )
    .unwrap();
    let (rows, _) = compare(&raw, 1).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].status.starts_with("error"), "{}", rows[0].status);
    assert!(!rows[1].status.starts_with("error"));
}

#[test]
fn validate_single_suite() {
    let o = ipdhg(&["validate", "--suite", "moreau"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let checks: Vec<&str> = out.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|l| l.starts_with("PASS moreau/")), "{out}");
}

#[test]
fn broken_schur_pair_fails() {
    let a = fixture("a2i.mtx");
    let o = ipdhg(&["validate", "--matrix", a.to_str().unwrap(), "--m1", "1", "--m2", "1"]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).starts_with("FAIL schur/"));
    let o = ipdhg(&["validate", "--matrix", a.to_str().unwrap(), "--m1", "1", "--m2", "4"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn oracle_reports_certified_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("tvl1_8x8.cfg");
    let o = ipdhg(&["oracle", "-c", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let line = out.lines().nth(1).unwrap();
    let phi: f64 = line.split(',').next().unwrap().parse().unwrap();
    assert!(phi > 0.0);
    assert!(line.contains(",true,"));
}

#[test]
fn clap_usage_errors_exit_three() {
    assert_eq!(code(&ipdhg(&["solve", "--bogus"])), 3);
    assert_eq!(code(&ipdhg(&["--help"])), 0);
}
