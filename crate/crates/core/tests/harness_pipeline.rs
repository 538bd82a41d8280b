use graphsmooth::bounds;
use graphsmooth::estimator;
use graphsmooth::graph::GraphKind;
use graphsmooth::harness::experiment::{self, load_series, trial_instance};
use graphsmooth::harness::{
    emit_series, load_archive, run_experiment, run_trial, ExperimentConfig, MeasurementModel, MuRule,
    RunOptions, SmoothnessRule,
};
use graphsmooth::Error;

fn small(kind: GraphKind) -> ExperimentConfig {
    ExperimentConfig {
        name: "pipeline".into(),
        graph_kind: kind,
        model: MeasurementModel::SparseRows { theta: 0.6 },
        n: 3,
        sigma: 0.7,
        s_t: SmoothnessRule::Sqrt { c: 1.0 },
        t_grid: vec![8, 12, 20],
        trials: 6,
        base_seed: 4242,
        mu_rule: MuRule::Auto,
        c1: 3.0,
        delta: 0.05,
    }
}

fn threads(n: usize) -> RunOptions {
    RunOptions {
        threads: Some(n),
        ..RunOptions::default()
    }
}

#[test]
fn noiseless_constant_signal_is_recovered() {
    for kind in [GraphKind::Star, GraphKind::Complete, GraphKind::Path] {
        let cfg = ExperimentConfig {
            model: MeasurementModel::SparseRows { theta: 1.0 },
            sigma: 0.0,
            s_t: SmoothnessRule::Constant { c: 0.0 },
            mu_rule: MuRule::Fixed { mu: 1.0 },
            ..small(kind)
        };
        let res = run_experiment(&cfg, &threads(2)).unwrap();
        assert!(res.rows.iter().filter(|r| r.identifiable).count() >= res.rows.len() / 2);
        for r in res.rows.iter().filter(|r| r.identifiable) {
            assert!(r.mse <= 1e-14, "{kind:?} T={} trial {}: {}", r.t, r.trial, r.mse);
        }
    }
}

#[test]
fn reruns_are_bit_identical() {
    let cfg = small(GraphKind::Star);
    let a = experiment::archive_json(&run_experiment(&cfg, &threads(1)).unwrap()).unwrap();
    let b = experiment::archive_json(&run_experiment(&cfg, &threads(3)).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_cell_matches_full_run() {
    let cfg = small(GraphKind::Complete);
    let res = run_experiment(&cfg, &threads(2)).unwrap();
    let cell = run_trial(&cfg, 12, 4).unwrap();
    let stored = res.rows.iter().find(|r| r.t == 12 && r.trial == 4).unwrap();
    assert_eq!(&cell, stored);
}

#[test]
fn grid_subset_gives_same_cells() {
    let cfg = small(GraphKind::Star);
    let full = run_experiment(&cfg, &threads(2)).unwrap();
    let sub_cfg = ExperimentConfig {
        t_grid: vec![20],
        ..cfg
    };
    let sub = run_experiment(&sub_cfg, &threads(2)).unwrap();
    let from_full: Vec<_> = full.rows.iter().filter(|r| r.t == 20).cloned().collect();
    assert_eq!(sub.rows, from_full);
    assert_eq!(sub.aggregates[0], full.aggregates[2]);
}

#[test]
fn dense_replay_of_star_cells() {
    let cfg = ExperimentConfig {
        name: "replay".into(),
        graph_kind: GraphKind::Star,
        model: MeasurementModel::SparseRows { theta: 0.5 },
        n: 5,
        sigma: 1.0,
        s_t: SmoothnessRule::Sqrt { c: 1.0 },
        t_grid: vec![50],
        trials: 5,
        base_seed: 77,
        mu_rule: MuRule::Auto,
        c1: 3.0,
        delta: 0.05,
    };
    let t = 50;
    let mu = bounds::mu_star_rand_samp(0.5, t, 5, 1.0, (t as f64).sqrt(), 3.0, GraphKind::Star).unwrap();
    let res = run_experiment(&cfg, &threads(2)).unwrap();
    for row in &res.rows {
        let inst = trial_instance(&cfg, t, row.trial).unwrap();
        assert_eq!(inst.mu, mu);
        assert_eq!(row.mu_used, mu);
        if !row.identifiable {
            continue;
        }
        let x = estimator::dense_oracle_solve(&inst.graph, &inst.measurements, &inst.observations, mu, inst.mode)
            .unwrap();
        let mse = x.squared_distance(&inst.truth) / t as f64;
        assert!((mse - row.mse).abs() <= 1e-8 * mse.max(1.0), "trial {}: {mse} vs {}", row.trial, row.mse);
    }
}

#[test]
fn emitted_series_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        mu_rule: MuRule::Fixed { mu: 0.8 },
        ..small(GraphKind::Path)
    };
    let res = run_experiment(&cfg, &threads(2)).unwrap();
    let (csv, json) = emit_series(&res, dir.path()).unwrap();
    assert_eq!(load_archive(&json).unwrap(), res);
    let series = load_series(&csv).unwrap();
    assert_eq!(series.len(), res.config.t_grid.len());
    for (s, a) in series.iter().zip(&res.aggregates) {
        assert_eq!(*s, (a.t, a.mean_mse, a.median_mse, a.std_mse, a.trials));
    }
}

#[test]
fn resume_after_truncated_store() {
    let cfg = small(GraphKind::Star);
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        store: Some(dir.path().to_path_buf()),
        threads: Some(2),
        strict: false,
    };
    let first = run_experiment(&cfg, &opts).unwrap();
    let cells = dir.path().join("cells.jsonl");
    let text = std::fs::read_to_string(&cells).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), cfg.t_grid.len() * cfg.trials);
    let mut damaged = lines[..7].join("\n");
    damaged.push('\n');
    damaged.push_str(&lines[7][..lines[7].len() / 2]);
    std::fs::write(&cells, damaged).unwrap();

    let resumed = run_experiment(&cfg, &opts).unwrap();
    assert_eq!(resumed, first);
    assert_eq!(resumed, run_experiment(&cfg, &threads(1)).unwrap());
}

#[test]
fn store_rejects_other_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        store: Some(dir.path().to_path_buf()),
        ..threads(1)
    };
    run_experiment(&small(GraphKind::Star), &opts).unwrap();
    let other = ExperimentConfig {
        sigma: 2.0,
        ..small(GraphKind::Star)
    };
    assert!(matches!(run_experiment(&other, &opts), Err(Error::Config(_))));
}

#[test]
fn strict_mode_drops_flagged_trials() {
    let cfg = ExperimentConfig {
        model: MeasurementModel::SparseRows { theta: 0.2 },
        mu_rule: MuRule::Fixed { mu: 0.5 },
        t_grid: vec![4, 6],
        trials: 20,
        ..small(GraphKind::Complete)
    };
    let loose = run_experiment(&cfg, &threads(2)).unwrap();
    let strict = run_experiment(&cfg, &RunOptions { strict: true, ..threads(2) }).unwrap();
    let flagged: usize = loose.aggregates.iter().map(|a| a.flagged).sum();
    assert!(flagged > 0);
    for (l, s) in loose.aggregates.iter().zip(&strict.aggregates) {
        assert_eq!(l.trials, cfg.trials);
        assert_eq!(s.trials, cfg.trials - s.flagged);
        assert_eq!(l.flagged, s.flagged);
    }
    assert_eq!(loose.rows, strict.rows);
}

#[test]
fn invalid_configurations_rejected() {
    let bad_grid = ExperimentConfig {
        t_grid: vec![10, 10],
        ..small(GraphKind::Star)
    };
    assert!(run_experiment(&bad_grid, &threads(1)).is_err());
    let auto_path = small(GraphKind::Path);
    assert!(run_experiment(&auto_path, &threads(1)).is_err());
}
