use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, MeasurementModel};
use crate::bounds;
use crate::error::{Error, Result};
use crate::estimator::{self, SolveMode, SolveOptions};
use crate::graph::{self, StackedSignal};
use crate::io::write_atomic;
use crate::measurement::{self, MeasurementSet};
use crate::rng::{trial_seed, SeededStream};
use crate::signal::{self, SmoothnessBudget};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "GRAPHSMOOTH_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub t: usize,
    pub trial: usize,
    pub mse: f64,
    pub realized_s_t: f64,
    pub mu_used: f64,
    pub solver_iterations: usize,
    pub converged: bool,
    /// Whether the rank condition for a unique solution held.
    pub identifiable: bool,
}

impl TrialRow {
    pub fn flagged(&self) -> bool {
        !self.converged || !self.identifiable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub t: usize,
    pub mean_mse: f64,
    pub median_mse: f64,
    pub std_mse: f64,
    pub trials: usize,
    pub flagged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub version: String,
    pub config: ExperimentConfig,
    pub strict: bool,
    pub rows: Vec<TrialRow>,
    pub aggregates: Vec<Aggregate>,
}

/// Everything one trial draws, kept for replay and cross-checks.
#[derive(Debug, Clone)]
pub struct TrialInstance {
    pub graph: graph::Graph,
    pub measurements: MeasurementSet,
    pub truth: StackedSignal,
    pub observations: Vec<f64>,
    pub mu: f64,
    pub mode: SolveMode,
}

/// Draws the measurements, the ground truth (centered for Erdős–Rényi layers)
/// and the observations of one trial, in that order, from the trial's stream.
pub fn trial_instance(cfg: &ExperimentConfig, t: usize, trial: usize) -> Result<TrialInstance> {
    let mut rng = SeededStream::new(trial_seed(cfg.base_seed, t as u64, trial as u64));
    let g = graph::build(cfg.graph_kind, t)?;
    let (m, mode) = match cfg.model {
        MeasurementModel::SparseRows { theta } => (
            measurement::sample_sparse_rows(cfg.n, t, theta, &mut rng)?,
            SolveMode::Plain,
        ),
        MeasurementModel::ErLayers { p } => (
            measurement::sample_er_layers(cfg.n, &vec![p; t], &mut rng)?,
            SolveMode::Centered,
        ),
    };
    let budget = SmoothnessBudget::for_kind(cfg.s_t.eval(t), cfg.graph_kind)?;
    let mut x = budget.generate(cfg.n, t, &mut rng)?;
    if mode == SolveMode::Centered {
        x.center_in_place();
    }
    let noise = signal::gen_noise(m.total_rows(), cfg.sigma, &mut rng)?;
    let mut y = m.design_apply(&x)?;
    for (yi, e) in y.iter_mut().zip(&noise) {
        *yi += e;
    }
    Ok(TrialInstance {
        graph: g,
        measurements: m,
        truth: x,
        observations: y,
        mu: cfg.mu_for(t)?,
        mode,
    })
}

/// Runs one `(T, trial)` cell. The trial's stream is seeded from
/// `trial_seed(base_seed, T, trial)`, so any cell can be re-run alone.
pub fn run_trial(cfg: &ExperimentConfig, t: usize, trial: usize) -> Result<TrialRow> {
    let inst = trial_instance(cfg, t, trial)?;
    let m = &inst.measurements;
    let identifiable = match inst.mode {
        SolveMode::Plain => estimator::check_full_rank(m).is_ok(),
        SolveMode::Centered => estimator::check_rank_deficient_by_one(m).is_ok(),
    };
    let opts = SolveOptions {
        mode: inst.mode,
        ..SolveOptions::new(inst.mu)
    };
    let rhs = m.design_apply_transpose(&inst.observations)?;
    let report = estimator::solve_with_rhs(&inst.graph, m, rhs.as_slice(), &opts);
    if !report.converged {
        warn!("T = {t}, trial {trial}: solver stopped after {} iterations", report.iterations);
    }
    Ok(TrialRow {
        t,
        trial,
        mse: report.estimate.squared_distance(&inst.truth) / t as f64,
        realized_s_t: graph::quadratic_variation(&inst.graph, &inst.truth)?,
        mu_used: inst.mu,
        solver_iterations: report.iterations,
        converged: report.converged,
        identifiable,
    })
}

pub fn median(sorted: &[f64]) -> f64 {
    let k = sorted.len();
    if k == 0 {
        return f64::NAN;
    }
    if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    }
}

/// Per-`T` statistics in increasing `T`; `strict` drops flagged trials.
/// The standard deviation uses the `k − 1` denominator and is 0 for a single trial.
pub fn aggregate(rows: &[TrialRow], strict: bool) -> Vec<Aggregate> {
    let mut by_t: BTreeMap<usize, Vec<&TrialRow>> = BTreeMap::new();
    for r in rows {
        by_t.entry(r.t).or_default().push(r);
    }
    by_t.into_iter()
        .map(|(t, mut group)| {
            group.sort_by_key(|r| r.trial);
            let flagged = group.iter().filter(|r| r.flagged()).count();
            let mut values: Vec<f64> = group
                .iter()
                .filter(|r| !(strict && r.flagged()))
                .map(|r| r.mse)
                .collect();
            let k = values.len();
            let mean = if k == 0 {
                f64::NAN
            } else {
                values.iter().sum::<f64>() / k as f64
            };
            let std = if k > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
            } else {
                0.0
            };
            values.sort_by(f64::total_cmp);
            Aggregate {
                t,
                mean_mse: mean,
                median_mse: median(&values),
                std_mse: std,
                trials: k,
                flagged,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory holding `config.json` and the append-only `cells.jsonl`.
    /// Cells already present there are not recomputed.
    pub store: Option<PathBuf>,
    pub strict: bool,
    /// Worker count; falls back to `GRAPHSMOOTH_THREADS`, then to rayon's default.
    pub threads: Option<usize>,
}

pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

fn load_cells(path: &Path) -> Result<Vec<TrialRow>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut rows = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TrialRow>(&line) {
            Ok(r) => rows.push(r),
            Err(e) => warn!("skipping unreadable cell record ({e})"),
        }
    }
    Ok(rows)
}

fn prepare_store(dir: &Path, cfg: &ExperimentConfig) -> Result<Vec<TrialRow>> {
    fs::create_dir_all(dir)?;
    let cfg_path = dir.join("config.json");
    let echo = serde_json::to_string_pretty(cfg)?;
    if cfg_path.exists() {
        let previous: ExperimentConfig = serde_json::from_str(&fs::read_to_string(&cfg_path)?)?;
        if previous != *cfg {
            return Err(Error::Config(format!(
                "{} belongs to a different configuration",
                dir.display()
            )));
        }
    } else {
        write_atomic(&cfg_path, &echo)?;
    }
    load_cells(&dir.join("cells.jsonl"))
}

/// Runs every `(T, trial)` cell of the grid on a worker pool and aggregates.
/// The result depends only on the configuration: rows are sorted by `(T, trial)`
/// before aggregation, whatever the scheduling.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentResult> {
    cfg.validate()?;
    let mut done: BTreeMap<(usize, usize), TrialRow> = BTreeMap::new();
    let cells_path = opts.store.as_ref().map(|d| d.join("cells.jsonl"));
    if let Some(dir) = &opts.store {
        let grid: std::collections::BTreeSet<usize> = cfg.t_grid.iter().copied().collect();
        for r in prepare_store(dir, cfg)? {
            if grid.contains(&r.t) && r.trial < cfg.trials {
                done.insert((r.t, r.trial), r);
            }
        }
        if !done.is_empty() {
            info!("resuming: {} cells already stored", done.len());
        }
    }

    if let MeasurementModel::SparseRows { theta } = cfg.model {
        for &t in &cfg.t_grid {
            if !bounds::rand_samp_sample_size_ok(theta, t, cfg.n, cfg.delta) {
                warn!("T = {t} is below the sample size (8n/θ)log(n/δ) for theta = {theta}");
            }
        }
    }

    let pending: Vec<(usize, usize)> = cfg
        .t_grid
        .iter()
        .flat_map(|&t| (0..cfg.trials).map(move |k| (t, k)))
        .filter(|key| !done.contains_key(key))
        .collect();

    let writer = match &cells_path {
        Some(p) => Some(Mutex::new(OpenOptions::new().create(true).append(true).open(p)?)),
        None => None,
    };
    let threads = opts.threads.or_else(threads_from_env).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let fresh: Vec<Result<TrialRow>> = pool.install(|| {
        pending
            .par_iter()
            .map(|&(t, k)| {
                let row = run_trial(cfg, t, k)?;
                if let Some(w) = &writer {
                    let line = serde_json::to_string(&row)?;
                    let mut f = w.lock().expect("cell writer poisoned");
                    writeln!(f, "{line}")?;
                    f.flush()?;
                }
                Ok(row)
            })
            .collect()
    });
    let mut first_err = None;
    for r in fresh {
        match r {
            Ok(row) => {
                done.insert((row.t, row.trial), row);
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }

    let rows: Vec<TrialRow> = done.into_values().collect();
    let aggregates = aggregate(&rows, opts.strict);
    Ok(ExperimentResult {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        strict: opts.strict,
        rows,
        aggregates,
    })
}

pub fn series_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("T,mean_mse,median_mse,std_mse,trials\n");
    for a in &result.aggregates {
        out.push_str(&format!(
            "{},{:?},{:?},{:?},{}\n",
            a.t, a.mean_mse, a.median_mse, a.std_mse, a.trials
        ));
    }
    out
}

pub fn archive_json(result: &ExperimentResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(result)?)
}

/// Writes `series.csv` and `result.json` into `dir`; returns their paths.
pub fn emit_series(result: &ExperimentResult, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let csv = dir.join("series.csv");
    let json = dir.join("result.json");
    write_atomic(&csv, &series_csv(result))?;
    write_atomic(&json, &archive_json(result)?)?;
    Ok((csv, json))
}

pub fn load_archive(path: &Path) -> Result<ExperimentResult> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Parses a series CSV back into `(T, mean, median, std, trials)` tuples.
pub fn load_series(path: &Path) -> Result<Vec<(usize, f64, f64, f64, usize)>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || Error::Parse {
            line: i + 1,
            msg: "malformed series row".into(),
        };
        if f.len() != 5 {
            return Err(bad());
        }
        out.push((
            f[0].parse().map_err(|_| bad())?,
            f[1].parse().map_err(|_| bad())?,
            f[2].parse().map_err(|_| bad())?,
            f[3].parse().map_err(|_| bad())?,
            f[4].parse().map_err(|_| bad())?,
        ));
    }
    Ok(out)
}
