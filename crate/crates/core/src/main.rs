use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

use graphsmooth::bounds::{self, BoundInputs, VarianceForm};
use graphsmooth::estimator::{self, Preconditioner, SolveMode, SolveOptions};
use graphsmooth::harness::{self, verify, ExperimentConfig, RunOptions};
use graphsmooth::{graph, io, measurement, Error, GraphKind, SeededStream};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(name = "graphsmooth", version, about = "Smoothness-penalized recovery of graph signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment and write series.csv and result.json.
    Simulate(SimulateArgs),
    /// Empirical checks of the eigenvalue bounds and sampling guarantees.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Evaluate eigenvalue bounds, error bounds and penalty rules.
    #[command(subcommand)]
    Bounds(BoundsCommand),
    /// Solve the penalized normal equations for one instance.
    Solve(SolveArgs),
    /// Write a graph in edge-list format.
    GenGraph(GenGraphArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Configuration file in `key = value` format.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset instead of a configuration file.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory; also holds the resume store.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exclude flagged trials from the aggregates.
    #[arg(long)]
    strict: bool,
    /// Worker threads (overrides GRAPHSMOOTH_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Override the number of trials.
    #[arg(long)]
    trials: Option<usize>,
    /// List the presets and exit.
    #[arg(long)]
    list_presets: bool,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Dense smallest eigenvalue against the closed-form bound.
    Lemma {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        cases: usize,
        /// Factor applied to the bound before comparing (verifier self-test).
        #[arg(long, default_value_t = 1.0)]
        corruption: f64,
    },
    /// Same check for centered incidence designs.
    Sync {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 1.0)]
        corruption: f64,
    },
    /// Gram spectrum sandwich for sparse random rows.
    Prop2 {
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Defaults to ⌈(8n/θ) log(n/δ)⌉.
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 200)]
        seeds: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Required pass rate; defaults to 1 − 2δ.
        #[arg(long)]
        min_rate: Option<f64>,
    },
    /// Gram spectrum sandwich and norm bound for Erdős–Rényi layers.
    Prop5 {
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        t: usize,
        #[arg(long, default_value_t = 0.05)]
        p: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 200)]
        seeds: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Required pass rate; defaults to 1 − δ.
        #[arg(long)]
        min_rate: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Theorem,
    Lemma,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Complete,
    Star,
    RandSamp,
    Sync,
}

#[derive(Subcommand)]
enum BoundsCommand {
    /// λ̄′(μ) and λ̄(μ) from explicit b-quantities.
    Lemma {
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        b1: f64,
        #[arg(long)]
        b2: f64,
        #[arg(long)]
        b3: f64,
        #[arg(long, default_value_t = 0.0)]
        lambda_min_ctc: f64,
    },
    /// b-quantities and the error bound of a concrete instance.
    Instance {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        measurements: PathBuf,
        #[arg(long)]
        mu: f64,
        /// Treat the design as incidence layers (centered setting).
        #[arg(long)]
        sync: bool,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Smoothness budget; required for the error bound.
        #[arg(long)]
        s_t: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, value_enum, default_value = "theorem")]
        form: FormArg,
    },
    /// Penalty selection rules.
    MuStar {
        #[arg(long, value_enum)]
        rule: RuleArg,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long)]
        s_t: f64,
        #[arg(long)]
        c1: Option<f64>,
        /// Lower bound on λ_min of the Gram sum (complete/star rules).
        #[arg(long)]
        lmin: Option<f64>,
        /// Upper bound on λ_max of the Gram sum (complete/star rules).
        #[arg(long)]
        lmax: Option<f64>,
        #[arg(long)]
        design_norm: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        /// Per-layer edge probability (sync rule); p_sum = T·p.
        #[arg(long)]
        p: Option<f64>,
        /// Graph family for the rand-samp and sync rules.
        #[arg(long, default_value = "complete")]
        kind: String,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Plain,
    Centered,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    measurements: PathBuf,
    #[arg(long)]
    observations: PathBuf,
    #[arg(long)]
    mu: f64,
    #[arg(long, value_enum, default_value = "plain")]
    mode: ModeArg,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Signal dimension, if the measurement file does not declare it.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    jacobi: bool,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenGraphArgs {
    #[arg(long)]
    kind: String,
    /// Vertex count.
    #[arg(long)]
    t: usize,
    /// Edge probability for Erdős–Rényi graphs.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Lib(Error),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CliResult = std::result::Result<(), Failure>;

fn print_json(v: &impl serde::Serialize) -> CliResult {
    println!("{}", serde_json::to_string_pretty(v).map_err(Error::from)?);
    Ok(())
}

fn require_rate(name: &str, rate: f64, min: f64) -> CliResult {
    if rate < min {
        return Err(Failure::Verification(format!(
            "{name} pass rate {rate:.4} below {min:.4}"
        )));
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> CliResult {
    if args.list_presets {
        for name in harness::PRESET_NAMES {
            println!("{name}");
        }
        return Ok(());
    }
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::parse(&io::read_to_string(path)?)?,
        (None, Some(name)) => harness::preset(name)?,
        (None, None) => return Err(Error::Config("pass --config or --preset".into()).into()),
    };
    if let Some(trials) = args.trials {
        cfg.trials = trials;
        cfg.validate()?;
    }
    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from("graphsmooth-out").join(&cfg.name));
    let opts = RunOptions {
        store: Some(out.clone()),
        strict: args.strict,
        threads: args.threads,
    };
    let result = harness::run_experiment(&cfg, &opts)?;
    let (csv, json) = harness::emit_series(&result, &out)?;
    info!("wrote {} and {}", csv.display(), json.display());
    print!("{}", harness::experiment::series_csv(&result));
    Ok(())
}

fn run_verify(cmd: VerifyCommand) -> CliResult {
    match cmd {
        VerifyCommand::Lemma {
            seed,
            cases,
            corruption,
        } => {
            let r = verify::verify_lemma(seed, cases, corruption)?;
            print_json(&r)?;
            if !r.all_passed() {
                return Err(Failure::Verification(format!(
                    "{} of {} cases violated the bound",
                    r.cases - r.passes,
                    r.cases
                )));
            }
            Ok(())
        }
        VerifyCommand::Sync {
            seed,
            cases,
            corruption,
        } => {
            let r = verify::verify_sync_bound(seed, cases, corruption)?;
            print_json(&r)?;
            if !r.all_passed() {
                return Err(Failure::Verification(format!(
                    "{} of {} cases violated the bound",
                    r.cases - r.passes,
                    r.cases
                )));
            }
            Ok(())
        }
        VerifyCommand::Prop2 {
            n,
            theta,
            delta,
            t,
            seeds,
            seed,
            min_rate,
        } => {
            let t = t.unwrap_or_else(|| (8.0 * n as f64 / theta * (n as f64 / delta).ln()).ceil() as usize);
            let r = verify::verify_prop2(n, theta, t, delta, seeds, seed)?;
            if !r.hypothesis_met {
                log::warn!("T = {t} is below the sample size the guarantee assumes");
            }
            print_json(&json!({ "t": t, "report": r }))?;
            require_rate("sandwich", r.sandwich_rate, min_rate.unwrap_or(1.0 - 2.0 * delta))
        }
        VerifyCommand::Prop5 {
            n,
            t,
            p,
            delta,
            seeds,
            seed,
            min_rate,
        } => {
            let r = verify::verify_prop5(n, t, p, delta, seeds, seed)?;
            if !r.hypothesis_met {
                log::warn!("n·p_sum is below log(n/δ); the union may be disconnected");
            }
            print_json(&r)?;
            let min = min_rate.unwrap_or(1.0 - delta);
            require_rate("sandwich", r.sandwich_rate, min)?;
            require_rate("norm", r.norm_rate.unwrap_or(0.0), min)
        }
    }
}

fn load_problem(
    graph_path: &Path,
    meas_path: &Path,
    n: Option<usize>,
) -> std::result::Result<(graph::Graph, measurement::MeasurementSet), Error> {
    let g = io::parse_edge_list(&io::read_to_string(graph_path)?)?;
    let m = io::parse_measurements(&io::read_to_string(meas_path)?, g.vertex_count(), n)?;
    Ok((g, m))
}

fn run_bounds(cmd: BoundsCommand) -> CliResult {
    match cmd {
        BoundsCommand::Lemma {
            mu,
            b1,
            b2,
            b3,
            lambda_min_ctc,
        } => {
            let inputs = BoundInputs::new(mu, b1, b2, b3, lambda_min_ctc)?;
            let lbp = bounds::lambda_bar_prime(&inputs)?;
            print_json(&json!({
                "inputs": inputs,
                "lambda_bar_prime": lbp.value,
                "regime": lbp.regime,
                "lambda_bar": bounds::lambda_bar(&inputs)?,
                "regime_threshold_mu": inputs.regime_threshold_mu(),
            }))
        }
        BoundsCommand::Instance {
            graph,
            measurements,
            mu,
            sync,
            sigma,
            s_t,
            delta,
            form,
        } => {
            let (g, m) = load_problem(&graph, &measurements, None)?;
            let summary = measurement::gram_summary(&m)?;
            let inputs = bounds::bound_inputs_from(&g, &m, &summary, mu, sync)?;
            let spectrum = graph::laplacian_spectrum(&g)?;
            let report = match s_t {
                Some(s) => Some(bounds::error_bound_with(
                    &inputs,
                    &spectrum,
                    m.n(),
                    sigma,
                    summary.design_norm,
                    s,
                    delta,
                    match form {
                        FormArg::Theorem => VarianceForm::Theorem,
                        FormArg::Lemma => VarianceForm::Lemma,
                    },
                )?),
                None => None,
            };
            print_json(&json!({
                "inputs": inputs,
                "lambda_bar_prime": bounds::lambda_bar_prime(&inputs)?.value,
                "lambda_bar": bounds::lambda_bar(&inputs)?,
                "gram_eigenvalues": summary.eigenvalues,
                "design_norm": summary.design_norm,
                "laplacian_eigenvalues": spectrum.eigenvalues,
                "error_bound": report,
            }))
        }
        BoundsCommand::MuStar {
            rule,
            t,
            n,
            sigma,
            s_t,
            c1,
            lmin,
            lmax,
            design_norm,
            theta,
            p,
            kind,
            delta,
        } => {
            let need = |v: Option<f64>, name: &str| {
                v.ok_or_else(|| Error::Config(format!("this rule needs --{name}")))
            };
            let kind: GraphKind = kind.parse()?;
            let mu = match rule {
                RuleArg::Complete => bounds::mu_star_complete(
                    need(lmin, "lmin")?,
                    need(lmax, "lmax")?,
                    n,
                    sigma,
                    need(design_norm, "design-norm")?,
                    s_t,
                    t,
                    c1.unwrap_or(bounds::C1_COMPLETE),
                )?,
                RuleArg::Star => bounds::mu_star_star_graph(
                    need(lmin, "lmin")?,
                    need(lmax, "lmax")?,
                    n,
                    sigma,
                    need(design_norm, "design-norm")?,
                    s_t,
                    t,
                    c1.unwrap_or(bounds::C1_STAR),
                )?,
                RuleArg::RandSamp => {
                    let theta = need(theta, "theta")?;
                    if !bounds::rand_samp_sample_size_ok(theta, t, n, delta) {
                        log::warn!("T is below the sample size (8n/θ)log(n/δ)");
                    }
                    let default_c1 = if kind == GraphKind::Star {
                        bounds::C1_STAR
                    } else {
                        bounds::C1_COMPLETE
                    };
                    bounds::mu_star_rand_samp(theta, t, n, sigma, s_t, c1.unwrap_or(default_c1), kind)?
                }
                RuleArg::Sync => {
                    let p = need(p, "p")?;
                    let gamma = bounds::gamma_nt(n, p, t, delta);
                    bounds::mu_star_sync(
                        p * t as f64,
                        gamma,
                        n,
                        sigma,
                        s_t,
                        t,
                        c1.unwrap_or(bounds::C2_SYNC),
                        kind,
                    )?
                }
            };
            print_json(&json!({ "mu_star": mu }))
        }
    }
}

fn run_solve(args: SolveArgs) -> CliResult {
    let (g, m) = load_problem(&args.graph, &args.measurements, args.n)?;
    let y = io::parse_vector(&io::read_to_string(&args.observations)?)?;
    let mut opts = SolveOptions::new(args.mu).with_tol(args.tol);
    opts.max_iters = args.max_iters;
    opts.mode = match args.mode {
        ModeArg::Plain => SolveMode::Plain,
        ModeArg::Centered => SolveMode::Centered,
    };
    if args.jacobi {
        opts.preconditioner = Preconditioner::Jacobi;
    }
    let report = estimator::solve(&g, &m, &y, &opts)?;
    if !report.converged {
        log::warn!(
            "not converged after {} iterations (residual {:e})",
            report.iterations,
            report.final_residual
        );
    } else {
        info!(
            "converged in {} iterations (residual {:e})",
            report.iterations, report.final_residual
        );
    }
    let csv = io::format_signal(&report.estimate);
    match args.out {
        Some(path) => io::write_atomic(&path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn run_gen_graph(args: GenGraphArgs) -> CliResult {
    let kind: GraphKind = args.kind.parse()?;
    let g = match kind {
        GraphKind::ErdosRenyi => {
            let p = args
                .p
                .ok_or_else(|| Error::Config("erdos_renyi needs --p".into()))?;
            graph::build_erdos_renyi(args.t, p, &mut SeededStream::new(args.seed))?
        }
        GraphKind::Custom => return Err(Error::Config("cannot generate a custom graph".into()).into()),
        other => graph::build(other, args.t)?,
    };
    let text = io::format_edge_list(&g);
    match args.out {
        Some(path) => io::write_atomic(&path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Parse { .. }
        | Error::InvalidParameter(_)
        | Error::InvalidSize(_)
        | Error::DimensionMismatch { .. } => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Verify(c) => run_verify(c),
        Command::Bounds(c) => run_bounds(c),
        Command::Solve(a) => run_solve(a),
        Command::GenGraph(a) => run_gen_graph(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(EXIT_VERIFY)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
