use std::path::Path;
use std::process::{Command, Output};

use graphsmooth::estimator::{self, SolveOptions};
use graphsmooth::graph::build_star;
use graphsmooth::harness::verify::random_gaussian_design;
use graphsmooth::{io, SeededStream};
use serde_json::Value;

fn graphsmooth(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphsmooth"))
        .args(args)
        .current_dir(cwd)
        .env_remove("GRAPHSMOOTH_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

#[test]
fn solve_round_trip_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let (n, t) = (3, 7);
    let mut rng = SeededStream::new(31);
    let g = build_star(t).unwrap();
    let m = random_gaussian_design(n, t, &mut rng);
    let y: Vec<f64> = (0..m.total_rows()).map(|_| rng.standard_normal()).collect();
    std::fs::write(dir.path().join("g.txt"), io::format_edge_list(&g)).unwrap();
    std::fs::write(dir.path().join("m.csv"), io::format_measurements(&m)).unwrap();
    std::fs::write(dir.path().join("y.txt"), io::format_vector(&y)).unwrap();

    let out = graphsmooth(
        &["solve", "--graph", "g.txt", "--measurements", "m.csv", "--observations", "y.txt", "--mu", "0.7", "--out", "x.csv"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let x = io::parse_signal(&std::fs::read_to_string(dir.path().join("x.csv")).unwrap(), n, t).unwrap();
    let want = estimator::solve_penalized(&g, &m, &y, &SolveOptions::new(0.7)).unwrap();
    assert_eq!(x, want.estimate);
}

#[test]
fn solve_rejects_mismatched_observations() {
    let dir = tempfile::tempdir().unwrap();
    let g = build_star(4).unwrap();
    let m = random_gaussian_design(2, 4, &mut SeededStream::new(1));
    std::fs::write(dir.path().join("g.txt"), io::format_edge_list(&g)).unwrap();
    std::fs::write(dir.path().join("m.csv"), io::format_measurements(&m)).unwrap();
    std::fs::write(dir.path().join("y.txt"), "1.0\n").unwrap();
    let out = graphsmooth(
        &["solve", "--graph", "g.txt", "--measurements", "m.csv", "--observations", "y.txt", "--mu", "1"],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
    std::fs::write(dir.path().join("bad.txt"), "T 4\n1 9\n").unwrap();
    let out = graphsmooth(
        &["solve", "--graph", "bad.txt", "--measurements", "m.csv", "--observations", "y.txt", "--mu", "1"],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn gen_graph_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = graphsmooth(&["gen-graph", "--kind", "complete", "--t", "5"], dir.path());
    assert_eq!(code(&out), 0);
    let g = io::parse_edge_list(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(g.edge_count(), 10);

    let a = graphsmooth(&["gen-graph", "--kind", "erdos_renyi", "--t", "12", "--p", "0.3", "--seed", "4"], dir.path());
    let b = graphsmooth(&["gen-graph", "--kind", "erdos_renyi", "--t", "12", "--p", "0.3", "--seed", "4"], dir.path());
    assert_eq!(a.stdout, b.stdout);
    let missing_p = graphsmooth(&["gen-graph", "--kind", "erdos_renyi", "--t", "12"], dir.path());
    assert_eq!(code(&missing_p), 2);
    let unknown = graphsmooth(&["gen-graph", "--kind", "wheel", "--t", "12"], dir.path());
    assert_eq!(code(&unknown), 2);
}

#[test]
fn simulate_small_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.cfg"),
        "name = tiny\ngraph = complete\nmodel = sparse_rows\ntheta = 0.5\nn = 2\nt_grid = 10, 20\ntrials = 3\nseed = 9\nc1 = 2\n",
    )
    .unwrap();
    let out = graphsmooth(&["simulate", "--config", "exp.cfg", "--out", "run", "--threads", "2"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 3);
    let csv = std::fs::read_to_string(dir.path().join("run/series.csv")).unwrap();
    assert_eq!(csv, stdout);
    let archive: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run/result.json")).unwrap()).unwrap();
    assert_eq!(archive["rows"].as_array().unwrap().len(), 6);
    assert!(dir.path().join("run/cells.jsonl").exists());

    let again = graphsmooth(&["simulate", "--config", "exp.cfg", "--out", "run", "--threads", "1"], dir.path());
    assert_eq!(again.stdout, stdout.as_bytes());
}

#[test]
fn simulate_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "graph = hypercube\n").unwrap();
    assert_eq!(code(&graphsmooth(&["simulate", "--config", "bad.cfg"], dir.path())), 2);
    assert_eq!(code(&graphsmooth(&["simulate", "--preset", "nope"], dir.path())), 2);
    let list = graphsmooth(&["simulate", "--list-presets"], dir.path());
    assert_eq!(code(&list), 0);
    assert_eq!(String::from_utf8(list.stdout).unwrap().lines().count(), 8);
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = graphsmooth(&["verify", "lemma", "--cases", "20"], dir.path());
    assert_eq!(code(&ok), 0);
    let report = stdout_json(&ok);
    assert_eq!(report["passes"], 20);
    let corrupted = graphsmooth(&["verify", "lemma", "--cases", "40", "--corruption", "3"], dir.path());
    assert_eq!(code(&corrupted), 3);
    let strict = graphsmooth(&["verify", "prop2", "--seeds", "20", "--min-rate", "1.5"], dir.path());
    assert_eq!(code(&strict), 3);
}

#[test]
fn bounds_lemma_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = graphsmooth(&["bounds", "lemma", "--mu", "1", "--b1", "1", "--b2", "1", "--b3", "2"], dir.path());
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert!((v["lambda_bar_prime"].as_f64().unwrap() - 0.1).abs() < 1e-15);
    assert_eq!(v["regime_threshold_mu"].as_f64().unwrap(), 2.5);

    let bad = graphsmooth(&["bounds", "lemma", "--mu", "1", "--b1", "1", "--b2", "3", "--b3", "2"], dir.path());
    assert_ne!(code(&bad), 0);
}

#[test]
fn bounds_mu_star_rules() {
    let dir = tempfile::tempdir().unwrap();
    let out = graphsmooth(
        &["bounds", "mu-star", "--rule", "rand-samp", "--theta", "0.5", "--t", "1000", "--n", "5", "--s-t", "1000", "--kind", "star", "--c1", "3"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let missing = graphsmooth(&["bounds", "mu-star", "--rule", "complete", "--t", "4", "--n", "1", "--s-t", "1"], dir.path());
    assert_eq!(code(&missing), 2);
}
