use std::path::Path;
use std::process::{Command, Output};

use rfextra::harness::{read_csv, CSV_HEADER};
use rfextra::problems::IdxImages;
use rfextra::Topology;

fn rfextra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfextra"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_on_default_config_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pca.cfg");
    let csv = dir.path().join("trace.csv");
    let out = rfextra(&["gen", "config", "--out", path_str(&cfg)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let out = rfextra(&["run", "--config", path_str(&cfg), "--csv", path_str(&csv)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("termination=tolerance"));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    let trace = read_csv(&csv).unwrap();
    assert!(trace.last().unwrap().stationarity < 1e-8);
}

#[test]
fn flags_override_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    let csv = dir.path().join("trace.csv");
    std::fs::write(&cfg, "solver.max_iters = 50000\nsolver.tol = 1e-8\noutput.trace_every = 1\n").unwrap();
    let out = rfextra(&[
        "run",
        "--config",
        path_str(&cfg),
        "--max-iters",
        "7",
        "--set",
        "output.trace_every=3",
        "--csv",
        path_str(&csv),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let iters: Vec<usize> = read_csv(&csv).unwrap().iter().map(|r| r.iter).collect();
    assert_eq!(iters, vec![0, 3, 6, 7]);
}

#[test]
fn trace_goes_to_stdout_without_a_csv_path() {
    let out = rfextra(&["run", "--max-iters", "2", "--set", "problem.m=20"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn missing_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = rfextra(&["run", "--config", path_str(&dir.path().join("absent.cfg"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_key_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "solver.kind = rf_extra\nsolver.stepsize = 0.1\n").unwrap();
    let out = rfextra(&["run", "--config", path_str(&cfg)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("solver.stepsize"));

    let out = rfextra(&["run", "--set", "graph.colour=red"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("graph.colour"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&rfextra(&[])), 2);
    assert_eq!(code(&rfextra(&["launch"])), 2);
    assert_eq!(code(&rfextra(&["run", "--max-iters", "many"])), 2);
    assert_eq!(code(&rfextra(&["theory"])), 2);
    assert_eq!(code(&rfextra(&["theory", "--check", "no_such_check"])), 2);
    assert_eq!(code(&rfextra(&["grid", "--grid", "0.1,abc"])), 2);
    assert_eq!(code(&rfextra(&["--help"])), 0);
}

#[test]
fn divergent_run_exits_1() {
    let out = rfextra(&["run", "--beta-hat", "1e4", "--beta", "1", "--max-iters", "500", "--set", "problem.m=20"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert!(stderr(&out).contains("diverged"));
}

#[test]
fn grid_with_no_winner_exits_1() {
    let out = rfextra(&["grid", "--grid", "1e4,2e4", "--beta", "1", "--max-iters", "200", "--set", "problem.m=20"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("WINNER none"));
}

#[test]
fn grid_reports_the_tolerance_winner() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("best.csv");
    let out = rfextra(&["grid", "--grid", "1e-3,8e-2", "--max-iters", "8000", "--csv", path_str(&csv)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("POINT beta_hat=8e-2"));
    assert!(lines[0].contains("termination=tolerance"));
    assert_eq!(lines[2], "WINNER beta_hat=8e-2 termination=tolerance");
    assert!(read_csv(&csv).unwrap().last().unwrap().stationarity < 1e-8);
}

#[test]
fn theory_check_prints_one_line() {
    let out = rfextra(&["theory", "--check", "frobenius_witness", "--check", "penalty_lipschitz"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("CHECK frobenius_witness PASS "));
    assert!(lines[1].starts_with("CHECK penalty_lipschitz PASS "));
}

#[test]
fn theory_all_passes_on_defaults() {
    let out = rfextra(&["theory", "--all"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), rfextra::theory::CHECK_NAMES.len());
    assert!(stdout.lines().all(|l| l.starts_with("CHECK ") && l.contains(" PASS ")));
}

#[test]
fn generated_graph_round_trips_and_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("star.txt");
    let out = rfextra(&["gen", "graph", "--kind", "star", "--n", "8", "--out", path_str(&graph)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let t = Topology::read_edge_list(&graph).unwrap();
    assert_eq!(t.n(), 8);
    assert_eq!(t.edges().len(), 7);

    let out = rfextra(&["run", "--graph-file", path_str(&graph), "--max-iters", "3"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    // Graph size must match the agent count.
    let out = rfextra(&["run", "--graph-file", path_str(&graph), "--set", "problem.n=4", "--set", "problem.m=10"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn gen_data_files_have_expected_shapes() {
    let out = rfextra(&["gen", "pca", "--set", "problem.m=6", "--set", "problem.n=2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.lines().all(|l| l.split(',').count() == 10));

    let out = rfextra(&["gen", "lrmc", "--set", "problem.t=16", "--set", "problem.d=12", "--set", "problem.r=2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("row,col,value"));
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert!(cells[0].parse::<usize>().unwrap() < 12);
        assert!(cells[1].parse::<usize>().unwrap() < 16);
        cells[2].parse::<f64>().unwrap();
    }

    assert_eq!(code(&rfextra(&["gen", "pca", "--problem", "lrmc"])), 2);
    // Fewer rows than columns cannot carry a rank-d spectrum.
    assert_eq!(code(&rfextra(&["gen", "pca", "--set", "problem.m=3", "--set", "problem.n=2"])), 2);
}

#[test]
fn mnist_flag_loads_idx_images() {
    let dir = tempfile::tempdir().unwrap();
    let idx = dir.path().join("images.idx");
    let (count, rows, cols) = (16, 3, 4);
    let pixels = (0..count * rows * cols).map(|i| ((i * 37 + 11) % 256) as u8).collect();
    IdxImages { count, rows, cols, pixels }.write(&idx).unwrap();
    let out = rfextra(&[
        "run",
        "--mnist",
        path_str(&idx),
        "--set",
        "problem.n=4",
        "--set",
        "problem.r=2",
        "--max-iters",
        "5",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let bad = dir.path().join("bad.idx");
    std::fs::write(&bad, [0u8; 8]).unwrap();
    assert_eq!(code(&rfextra(&["run", "--mnist", path_str(&bad)])), 2);
}
