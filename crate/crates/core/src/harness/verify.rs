//! Empirical validation of the spectral bounds and sampling guarantees
//! against dense eigensolvers and Monte-Carlo replication.

use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundInputs, VarianceForm};
use crate::error::Result;
use crate::estimator::{self, SolveMode, SolveOptions};
use crate::graph::{self, Graph, GraphKind, StackedSignal};
use crate::linalg::{self, DenseMatrix};
use crate::measurement::{self, Block, MeasurementSet};
use crate::rng::{splitmix64, SeededStream};
use crate::signal;

/// Absolute slack allowed between a dense eigenvalue and its lower bound.
pub const BOUND_TOL: f64 = 1e-10;
/// Number of log-spaced penalties in `[1e-3, 1e3]` per instance.
pub const MU_GRID_POINTS: usize = 25;

pub fn mu_grid() -> Vec<f64> {
    (0..MU_GRID_POINTS)
        .map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / (MU_GRID_POINTS - 1) as f64))
        .collect()
}

fn case_stream(seed: u64, case: usize) -> SeededStream {
    SeededStream::new(splitmix64(splitmix64(seed) ^ case as u64))
}

fn random_kind(rng: &mut SeededStream) -> GraphKind {
    [GraphKind::Complete, GraphKind::Star, GraphKind::Path][rng.index(3)]
}

/// Gaussian blocks with 0 or 1 rows each, redrawn until the Gram sum is
/// numerically nonsingular. With probability 0.1 every block gets `n` rows
/// instead, so that `λ_min(CᵀC) > 0` and both terms of
/// `λ̄ = max(λ̄′, λ_min(CᵀC))` get exercised.
pub fn random_gaussian_design(n: usize, t: usize, rng: &mut SeededStream) -> MeasurementSet {
    loop {
        let everyone_full = rng.bernoulli(0.1);
        let blocks = (0..t)
            .map(|_| {
                let rows = if everyone_full { n } else { rng.index(2) };
                Block {
                    rows: (0..rows)
                        .map(|_| (0..n).map(|j| (j, rng.standard_normal())).collect())
                        .collect(),
                }
            })
            .collect();
        let m = MeasurementSet::new(n, blocks).expect("columns in range");
        if estimator::check_full_rank(&m).is_ok() {
            return m;
        }
    }
}

/// Erdős–Rényi incidence layers redrawn until the union is connected.
pub fn random_incidence_design(n: usize, t: usize, rng: &mut SeededStream) -> MeasurementSet {
    loop {
        let p: Vec<f64> = (0..t).map(|_| 0.2 + 0.7 * rng.uniform()).collect();
        let m = measurement::sample_er_layers(n, &p, rng).expect("valid probabilities");
        if estimator::check_rank_deficient_by_one(&m).is_ok() {
            return m;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSweepReport {
    pub cases: usize,
    pub passes: usize,
    /// Smallest `λ_dense − λ̄(μ)` over all cases and penalties.
    pub worst_margin: f64,
    /// Largest relative gap between the two branches at the regime threshold.
    pub worst_continuity: f64,
    pub failures: Vec<String>,
}

impl BoundSweepReport {
    pub fn all_passed(&self) -> bool {
        self.passes == self.cases
    }
}

fn lambda_bar_scaled(inputs: &BoundInputs, corruption: f64) -> Result<f64> {
    let lbp = bounds::lambda_bar_prime(inputs)?.value * corruption;
    Ok(lbp.max(inputs.lambda_min_ctc))
}

fn continuity_gap(inputs: &BoundInputs) -> f64 {
    let x = inputs.regime_threshold_mu() * inputs.b1;
    let lo = bounds::small_mu_branch(x, inputs.b2, inputs.b3);
    let hi = bounds::large_mu_branch(x, inputs.b2, inputs.b3);
    (lo - hi).abs() / lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
}

struct SweepCase {
    graph: Graph,
    measurements: MeasurementSet,
    sync: bool,
}

fn sweep(
    cases: usize,
    corruption: f64,
    mut draw: impl FnMut(usize) -> SweepCase,
) -> Result<BoundSweepReport> {
    let mut report = BoundSweepReport {
        cases,
        passes: 0,
        worst_margin: f64::INFINITY,
        worst_continuity: 0.0,
        failures: Vec::new(),
    };
    for case in 0..cases {
        let SweepCase {
            graph: g,
            measurements: m,
            sync,
        } = draw(case);
        let n = m.n();
        let t = g.vertex_count();
        let summary = measurement::gram_summary(&m)?;
        let base = bounds::bound_inputs_from(&g, &m, &summary, 1.0, sync)?;
        report.worst_continuity = report.worst_continuity.max(continuity_gap(&base));

        let mut mus = mu_grid();
        mus.push(base.regime_threshold_mu());
        let p = if sync {
            Some(estimator::dense_centering(n, t))
        } else {
            None
        };
        let mut ok = true;
        for mu in mus {
            let inputs = base.with_mu(mu);
            let bar = lambda_bar_scaled(&inputs, corruption)?;
            let mut a = bounds::dense_system_matrix(&g, &m, mu);
            let dense = match &p {
                None => linalg::symmetric_eigenvalues(&a)?[n * t - 1],
                Some(p) => {
                    a = p.matmul(&a).matmul(p);
                    linalg::symmetric_eigenvalues(&a)?[t * (n - 1) - 1]
                }
            };
            let margin = dense - bar;
            report.worst_margin = report.worst_margin.min(margin);
            if margin < -BOUND_TOL {
                ok = false;
                if report.failures.len() < 10 {
                    report.failures.push(format!(
                        "case {case} ({} T={t} n={n}) mu={mu:.3e}: dense {dense:.6e} < bound {bar:.6e}",
                        g.kind()
                    ));
                }
            }
        }
        if ok {
            report.passes += 1;
        }
    }
    Ok(report)
}

/// Checks `λ_min(μ(L⊗Iₙ)+CᵀC) ≥ λ̄(μ)` on random small instances
/// (`n ∈ {2,3}`, `T ∈ 3..=8`, complete/star/path graphs, Gaussian rows) over a
/// log-grid of penalties plus the regime threshold. `corruption` multiplies
/// `λ̄′` before the comparison; 1 gives the honest check.
pub fn verify_lemma(seed: u64, cases: usize, corruption: f64) -> Result<BoundSweepReport> {
    sweep(cases, corruption, |case| {
        let mut rng = case_stream(seed, case);
        let n = 2 + rng.index(2);
        let t = 3 + rng.index(6);
        let g = graph::build(random_kind(&mut rng), t).expect("T ≥ 3");
        SweepCase {
            measurements: random_gaussian_design(n, t, &mut rng),
            graph: g,
            sync: false,
        }
    })
}

/// Checks `λ_{T(n−1)}(P A P) ≥ λ̄(μ)` for Erdős–Rényi incidence layers with a
/// connected union (`n ∈ {3,4}`, `T ∈ 3..=7`).
pub fn verify_sync_bound(seed: u64, cases: usize, corruption: f64) -> Result<BoundSweepReport> {
    sweep(cases, corruption, |case| {
        let mut rng = case_stream(seed ^ 0x5A5A_5A5A, case);
        let n = 3 + rng.index(2);
        let t = 3 + rng.index(5);
        let g = graph::build(random_kind(&mut rng), t).expect("T ≥ 3");
        SweepCase {
            measurements: random_incidence_design(n, t, &mut rng),
            graph: g,
            sync: true,
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub seeds: usize,
    /// Seeds for which the eigenvalue sandwich held.
    pub sandwich_passes: usize,
    pub sandwich_rate: f64,
    /// Seeds for which `‖C‖₂ ≤ γ_{n,T}` held (Erdős–Rényi layers only).
    pub norm_passes: Option<usize>,
    pub norm_rate: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    pub hypothesis_met: bool,
}

/// Sparse random rows: fraction of seeds with
/// `θT/(2n) ≤ λ_min(O_TᵀO_T)` and `λ_max(O_TᵀO_T) ≤ 2eθT/n`.
pub fn verify_prop2(
    n: usize,
    theta: f64,
    t: usize,
    delta: f64,
    seeds: usize,
    base_seed: u64,
) -> Result<SamplingReport> {
    let tf = t as f64;
    let nf = n as f64;
    let lower = theta * tf / (2.0 * nf);
    let upper = 2.0 * std::f64::consts::E * theta * tf / nf;
    let mut passes = 0;
    for s in 0..seeds {
        let mut rng = case_stream(base_seed, s);
        let m = measurement::sample_sparse_rows(n, t, theta, &mut rng)?;
        let (_, ev) = measurement::gram_spectrum(&m)?;
        if ev[n - 1] >= lower && ev[0] <= upper {
            passes += 1;
        }
    }
    Ok(SamplingReport {
        seeds,
        sandwich_passes: passes,
        sandwich_rate: passes as f64 / seeds.max(1) as f64,
        norm_passes: None,
        norm_rate: None,
        lower,
        upper,
        hypothesis_met: bounds::rand_samp_sample_size_ok(theta, t, n, delta),
    })
}

/// Erdős–Rényi incidence layers with a common edge probability `p`: fraction
/// of seeds with `λ_{n−1}(O_TᵀO_T) ∈ [n p_sum/2, 3n p_sum/2]` and fraction
/// with `‖C‖₂ ≤ γ_{n,T}`.
pub fn verify_prop5(
    n: usize,
    t: usize,
    p: f64,
    delta: f64,
    seeds: usize,
    base_seed: u64,
) -> Result<SamplingReport> {
    let p_sum = p * t as f64;
    let nf = n as f64;
    let lower = nf * p_sum / 2.0;
    let upper = 3.0 * nf * p_sum / 2.0;
    let gamma = bounds::gamma_nt(n, p, t, delta);
    let (mut sandwich, mut norms) = (0, 0);
    for s in 0..seeds {
        let mut rng = case_stream(base_seed, s);
        let m = measurement::sample_er_layers(n, &vec![p; t], &mut rng)?;
        let summary = measurement::gram_summary(&m)?;
        let second = summary.lambda_second_min;
        if second >= lower && second <= upper {
            sandwich += 1;
        }
        if summary.design_norm <= gamma {
            norms += 1;
        }
    }
    let denom = seeds.max(1) as f64;
    Ok(SamplingReport {
        seeds,
        sandwich_passes: sandwich,
        sandwich_rate: sandwich as f64 / denom,
        norm_passes: Some(norms),
        norm_rate: Some(norms as f64 / denom),
        lower,
        upper,
        // the union of layers is connected with high probability
        hypothesis_met: nf * p_sum >= (nf / delta).ln(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasCheck {
    pub cases: usize,
    pub passes: usize,
    /// Largest `E1 − 4μS/λ̄(μ)`.
    pub worst_excess: f64,
}

/// Measured bias term `E1` against `4μ·S/λ̄(μ)` with `S` the realized quadratic
/// variation, on random small instances in both modes.
pub fn verify_bias_bound(seed: u64, cases: usize) -> Result<BiasCheck> {
    let mut out = BiasCheck {
        cases,
        passes: 0,
        worst_excess: f64::NEG_INFINITY,
    };
    for case in 0..cases {
        let mut rng = case_stream(seed ^ 0xB1A5, case);
        let sync = case % 2 == 1;
        let t = 3 + rng.index(6);
        let g = graph::build(random_kind(&mut rng), t)?;
        let (n, m) = if sync {
            let n = 3 + rng.index(2);
            (n, random_incidence_design(n, t, &mut rng))
        } else {
            let n = 2 + rng.index(2);
            (n, random_gaussian_design(n, t, &mut rng))
        };
        let mut x = StackedSignal::new(n, t, (0..n * t).map(|_| rng.standard_normal()).collect())?;
        if sync {
            x.center_in_place();
        }
        let mu = 10f64.powf(-2.0 + 4.0 * rng.uniform());
        let opts = SolveOptions {
            mode: if sync { SolveMode::Centered } else { SolveMode::Plain },
            ..SolveOptions::new(mu).with_tol(1e-12)
        };
        let eta = vec![0.0; m.total_rows()];
        let split = estimator::bias_variance_split(&g, &m, &x, &eta, &opts)?;
        let summary = measurement::gram_summary(&m)?;
        let inputs = bounds::bound_inputs_from(&g, &m, &summary, mu, sync)?;
        let bar = bounds::lambda_bar(&inputs)?;
        let s = graph::quadratic_variation(&g, &x)?;
        let excess = split.e1 - bounds::bias_bound(mu, bar, s);
        out.worst_excess = out.worst_excess.max(excess);
        if excess <= 1e-8 {
            out.passes += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCheck {
    pub instances: usize,
    pub draws: usize,
    pub exceedances: usize,
    pub exceedance_rate: f64,
    /// Largest `E2 / bound` ratio seen.
    pub worst_ratio: f64,
}

/// Draws `draws` noise vectors `η ~ N(0, σ²I)` on each of `instances` random
/// plain instances and counts how often `E2` exceeds the intermediate-form
/// variance bound at confidence `delta`.
pub fn verify_variance_bound(
    seed: u64,
    instances: usize,
    draws: usize,
    delta: f64,
) -> Result<VarianceCheck> {
    let mut exceed = 0;
    let mut worst_ratio: f64 = 0.0;
    for inst in 0..instances {
        let mut rng = case_stream(seed ^ 0x0A21_A4CE, inst);
        let n = 2 + rng.index(2);
        let t = 3 + rng.index(6);
        let g = graph::build(random_kind(&mut rng), t)?;
        let m = random_gaussian_design(n, t, &mut rng);
        let sigma = 0.5 + rng.uniform();
        let mu = 10f64.powf(-2.0 + 4.0 * rng.uniform());
        let summary = measurement::gram_summary(&m)?;
        let inputs = bounds::bound_inputs_from(&g, &m, &summary, mu, false)?;
        let bar = bounds::lambda_bar(&inputs)?;
        let spectrum = graph::laplacian_spectrum(&g)?;
        let bound = bounds::variance_bound(
            bar,
            mu,
            &spectrum,
            n,
            sigma,
            summary.design_norm,
            delta,
            VarianceForm::Lemma,
        );
        let opts = SolveOptions::new(mu).with_tol(1e-12);
        for _ in 0..draws {
            let eta = signal::gen_noise(m.total_rows(), sigma, &mut rng)?;
            let rhs = m.design_apply_transpose(&eta)?;
            let sol = estimator::solve_with_rhs(&g, &m, rhs.as_slice(), &opts);
            let e2 = 2.0 * linalg::dot(sol.estimate.as_slice(), sol.estimate.as_slice());
            worst_ratio = worst_ratio.max(e2 / bound);
            if e2 > bound {
                exceed += 1;
            }
        }
    }
    let total = instances * draws;
    Ok(VarianceCheck {
        instances,
        draws,
        exceedances: exceed,
        exceedance_rate: exceed as f64 / total.max(1) as f64,
        worst_ratio,
    })
}

/// Dense `λ_min` of the system matrix; exposed for ad-hoc checks.
pub fn dense_lambda_min(g: &Graph, m: &MeasurementSet, mu: f64) -> Result<f64> {
    let a: DenseMatrix = bounds::dense_system_matrix(g, m, mu);
    Ok(linalg::symmetric_eigen(&a)?.min())
}
