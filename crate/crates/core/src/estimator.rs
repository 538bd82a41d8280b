//! Penalized least squares solvers.
//!
//! The plain estimator solves `(μ(L⊗Iₙ) + CᵀC) x̂ = Cᵀy`. The centered
//! estimator (incidence designs) solves `P(μ(L⊗Iₙ) + CᵀC)P u = P Cᵀy` on
//! `range(P)`, `P = I_T ⊗ (Iₙ − 𝟙𝟙ᵀ/n)`, which yields the pseudoinverse
//! solution. Both run conjugate gradient without assembling the system.

use serde::{Deserialize, Serialize};

use crate::bounds::RANK_TOL;
use crate::error::{Error, Result};
use crate::graph::{self, center_slice, Graph, StackedSignal};
use crate::linalg::{self, axpy, dot, norm, DenseMatrix};
use crate::measurement::{self, MeasurementSet};

/// Iterates are re-projected onto `range(P)` this often in centered mode.
pub const REPROJECT_EVERY: usize = 50;
/// Largest `nT` accepted by the dense oracle.
pub const DENSE_ORACLE_LIMIT: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    #[default]
    Plain,
    Centered,
}

impl std::str::FromStr for SolveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(SolveMode::Plain),
            "centered" => Ok(SolveMode::Centered),
            other => Err(Error::InvalidParameter(format!("unknown solve mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    #[default]
    None,
    Jacobi,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub mu: f64,
    pub rel_tol: f64,
    /// Defaults to `10·nT` when unset.
    pub max_iters: Option<usize>,
    pub mode: SolveMode,
    pub preconditioner: Preconditioner,
    /// CG starting point; zero when unset.
    pub initial: Option<Vec<f64>>,
}

impl SolveOptions {
    pub fn new(mu: f64) -> Self {
        Self {
            mu,
            rel_tol: 1e-10,
            max_iters: None,
            mode: SolveMode::Plain,
            preconditioner: Preconditioner::None,
            initial: None,
        }
    }

    pub fn centered(mu: f64) -> Self {
        Self {
            mode: SolveMode::Centered,
            ..Self::new(mu)
        }
    }

    pub fn with_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = Some(max_iters);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::InvalidParameter(format!("mu = {} must be > 0", self.mu)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rel_tol = {} not in (0, 1)",
                self.rel_tol
            )));
        }
        if self.max_iters == Some(0) {
            return Err(Error::InvalidParameter("max_iters must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub estimate: StackedSignal,
    pub iterations: usize,
    /// `‖rhs − A x̂‖₂` as tracked by the CG recurrence.
    pub final_residual: f64,
    pub converged: bool,
}

fn check_problem(g: &Graph, m: &MeasurementSet, y: &[f64]) -> Result<()> {
    if g.vertex_count() != m.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.vertex_count(),
            actual: m.node_count(),
        });
    }
    if y.len() != m.total_rows() {
        return Err(Error::DimensionMismatch {
            expected: m.total_rows(),
            actual: y.len(),
        });
    }
    Ok(())
}

/// Fails with [`Error::SingularSystem`] unless `λ_min(O_TᵀO_T) > RANK_TOL·λ_max`.
pub fn check_full_rank(m: &MeasurementSet) -> Result<()> {
    let (_, ev) = measurement::gram_spectrum(m)?;
    let (min, max) = (ev[ev.len() - 1], ev[0]);
    if !(max > 0.0) || min <= RANK_TOL * max {
        return Err(Error::SingularSystem(format!(
            "λ_min(O_TᵀO_T) = {min:e} relative to λ_max = {max:e}"
        )));
    }
    Ok(())
}

/// Fails with [`Error::UnderDetermined`] unless `λ_{n−1}(O_TᵀO_T) > RANK_TOL·λ_max`.
pub fn check_rank_deficient_by_one(m: &MeasurementSet) -> Result<()> {
    let (_, ev) = measurement::gram_spectrum(m)?;
    let n = ev.len();
    let second = if n >= 2 { ev[n - 2] } else { 0.0 };
    let max = ev[0];
    if !(max > 0.0) || second <= RANK_TOL * max {
        return Err(Error::UnderDetermined(format!(
            "λ_{{n−1}}(O_TᵀO_T) = {second:e} relative to λ_max = {max:e}"
        )));
    }
    Ok(())
}

/// Plain estimator; requires `λ_min(O_TᵀO_T) > 0`.
pub fn solve_penalized(
    g: &Graph,
    m: &MeasurementSet,
    y: &[f64],
    opts: &SolveOptions,
) -> Result<SolveReport> {
    opts.validate()?;
    check_problem(g, m, y)?;
    check_full_rank(m)?;
    let opts = SolveOptions {
        mode: SolveMode::Plain,
        ..opts.clone()
    };
    let rhs = m.design_apply_transpose(y)?;
    Ok(solve_with_rhs(g, m, rhs.as_slice(), &opts))
}

/// Centered estimator for incidence designs; requires `λ_{n−1}(O_TᵀO_T) > 0`.
pub fn solve_sync(
    g: &Graph,
    m: &MeasurementSet,
    y: &[f64],
    opts: &SolveOptions,
) -> Result<SolveReport> {
    opts.validate()?;
    check_problem(g, m, y)?;
    check_rank_deficient_by_one(m)?;
    let opts = SolveOptions {
        mode: SolveMode::Centered,
        ..opts.clone()
    };
    let rhs = m.design_apply_transpose(y)?;
    Ok(solve_with_rhs(g, m, rhs.as_slice(), &opts))
}

/// Dispatches on `opts.mode`.
pub fn solve(g: &Graph, m: &MeasurementSet, y: &[f64], opts: &SolveOptions) -> Result<SolveReport> {
    match opts.mode {
        SolveMode::Plain => solve_penalized(g, m, y, opts),
        SolveMode::Centered => solve_sync(g, m, y, opts),
    }
}

/// Runs CG on `A x = rhs` (plain) or `PAP u = P rhs` (centered) without any
/// rank check. On a rank-deficient but consistent system CG from zero still
/// converges to the minimum-norm solution.
pub fn solve_with_rhs(
    g: &Graph,
    m: &MeasurementSet,
    rhs: &[f64],
    opts: &SolveOptions,
) -> SolveReport {
    let n = m.n();
    let t = m.node_count();
    let dim = n * t;
    let centered = opts.mode == SolveMode::Centered;
    let mu = opts.mu;

    let mut b = rhs.to_vec();
    if centered {
        center_slice(&mut b, n);
    }
    let mut scratch = vec![0.0; dim];
    let mut apply = |v: &[f64], out: &mut [f64]| {
        if centered {
            scratch.copy_from_slice(v);
            center_slice(&mut scratch, n);
            graph::laplacian_apply_into(g, n, &scratch, out);
            out.iter_mut().for_each(|o| *o *= mu);
            m.normal_apply_add(&scratch, out);
            center_slice(out, n);
        } else {
            graph::laplacian_apply_into(g, n, v, out);
            out.iter_mut().for_each(|o| *o *= mu);
            m.normal_apply_add(v, out);
        }
    };

    let inv_diag = match opts.preconditioner {
        Preconditioner::None => None,
        Preconditioner::Jacobi => {
            let deg = g.degrees();
            let mut d = m.normal_diagonal();
            for (k, v) in d.iter_mut().enumerate() {
                *v += mu * deg[k / n] as f64;
            }
            Some(d.into_iter().map(|v| if v > 0.0 { 1.0 / v } else { 1.0 }).collect::<Vec<_>>())
        }
    };

    let mut x = match &opts.initial {
        Some(x0) if x0.len() == dim => x0.clone(),
        _ => vec![0.0; dim],
    };
    if centered {
        center_slice(&mut x, n);
    }
    let max_iters = opts.max_iters.unwrap_or(10 * dim).max(1);
    let outcome = conjugate_gradient(
        &mut apply,
        &b,
        &mut x,
        opts.rel_tol,
        max_iters,
        inv_diag.as_deref(),
        if centered { Some(n) } else { None },
    );
    SolveReport {
        estimate: StackedSignal::new(n, t, x).expect("dimensions checked"),
        iterations: outcome.iterations,
        final_residual: outcome.residual,
        converged: outcome.converged,
    }
}

struct CgOutcome {
    iterations: usize,
    residual: f64,
    converged: bool,
}

/// (Preconditioned) conjugate gradient. `center_block`, when set, projects
/// every preconditioned residual onto `range(P)` and scrubs the iterate,
/// residual and direction every [`REPROJECT_EVERY`] iterations.
fn conjugate_gradient(
    apply: &mut impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iters: usize,
    inv_diag: Option<&[f64]>,
    center_block: Option<usize>,
) -> CgOutcome {
    let dim = b.len();
    let b_norm = norm(b);
    let target = rel_tol * b_norm;

    let mut ap = vec![0.0; dim];
    apply(x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect();
    let mut r_norm = norm(&r);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgOutcome {
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    if r_norm <= target {
        return CgOutcome {
            iterations: 0,
            residual: r_norm,
            converged: true,
        };
    }

    let precondition = |r: &[f64]| -> Vec<f64> {
        let mut z = match inv_diag {
            Some(d) => r.iter().zip(d).map(|(a, b)| a * b).collect(),
            None => r.to_vec(),
        };
        if let (Some(n), Some(_)) = (center_block, inv_diag) {
            center_slice(&mut z, n);
        }
        z
    };

    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);

    for k in 1..=max_iters {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            // breakdown: direction in the null space of the operator
            return CgOutcome {
                iterations: k - 1,
                residual: r_norm,
                converged: r_norm <= target,
            };
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);

        if let Some(n) = center_block {
            if k % REPROJECT_EVERY == 0 {
                center_slice(x, n);
                center_slice(&mut r, n);
                center_slice(&mut p, n);
            }
        }

        r_norm = norm(&r);
        if r_norm <= target {
            return CgOutcome {
                iterations: k,
                residual: r_norm,
                converged: true,
            };
        }
        z = precondition(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    CgOutcome {
        iterations: max_iters,
        residual: r_norm,
        converged: false,
    }
}

/// Squared-error decomposition terms of a single instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasVariance {
    /// `2μ²‖A⁻¹(L⊗Iₙ)x‖²`
    pub e1: f64,
    /// `2‖A⁻¹Cᵀη‖²`
    pub e2: f64,
    /// `‖x̂ − x‖²` of the estimate from `y = Cx + η`.
    pub squared_error: f64,
    pub estimate: StackedSignal,
}

/// Computes `E1`, `E2` and `‖x̂ − x‖²` and checks `‖x̂ − x‖² ≤ E1 + E2`.
///
/// In centered mode `A⁻¹` is the pseudoinverse of `PAP` and `x_true` must
/// be block-centered.
pub fn bias_variance_split(
    g: &Graph,
    m: &MeasurementSet,
    x_true: &StackedSignal,
    eta: &[f64],
    opts: &SolveOptions,
) -> Result<BiasVariance> {
    opts.validate()?;
    check_problem(g, m, eta)?;
    match opts.mode {
        SolveMode::Plain => check_full_rank(m)?,
        SolveMode::Centered => check_rank_deficient_by_one(m)?,
    }
    let lx = graph::laplacian_apply(g, x_true)?;
    let bias_dir = solve_with_rhs(g, m, lx.as_slice(), opts);
    let ct_eta = m.design_apply_transpose(eta)?;
    let noise_dir = solve_with_rhs(g, m, ct_eta.as_slice(), opts);

    let e1 = 2.0 * opts.mu * opts.mu * dot(bias_dir.estimate.as_slice(), bias_dir.estimate.as_slice());
    let e2 = 2.0 * dot(noise_dir.estimate.as_slice(), noise_dir.estimate.as_slice());

    let mut y = m.design_apply(x_true)?;
    for (yi, ei) in y.iter_mut().zip(eta) {
        *yi += ei;
    }
    let rhs = m.design_apply_transpose(&y)?;
    let fit = solve_with_rhs(g, m, rhs.as_slice(), opts);
    let squared_error = fit.estimate.squared_distance(x_true);
    if squared_error > (e1 + e2) * (1.0 + 1e-8) + 1e-12 {
        return Err(Error::InvariantViolation(format!(
            "‖x̂ − x‖² = {squared_error:e} exceeds E1 + E2 = {:e}",
            e1 + e2
        )));
    }
    Ok(BiasVariance {
        e1,
        e2,
        squared_error,
        estimate: fit.estimate,
    })
}

/// Dense `μ(L⊗Iₙ) + CᵀC`.
pub fn dense_system(g: &Graph, m: &MeasurementSet, mu: f64) -> DenseMatrix {
    crate::bounds::dense_system_matrix(g, m, mu)
}

/// Dense `P = I_T ⊗ (Iₙ − 𝟙𝟙ᵀ/n)`.
pub fn dense_centering(n: usize, t: usize) -> DenseMatrix {
    let block = DenseMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - 1.0 / n as f64);
    DenseMatrix::identity(t).kron(&block)
}

/// Applies the dense inverse (plain) or pseudoinverse of `PAP` (centered)
/// to `rhs`. Verification oracle independent of the CG path.
pub fn dense_oracle_apply_inverse(
    g: &Graph,
    m: &MeasurementSet,
    rhs: &[f64],
    mu: f64,
    mode: SolveMode,
) -> Result<StackedSignal> {
    let n = m.n();
    let t = m.node_count();
    let dim = n * t;
    if dim > DENSE_ORACLE_LIMIT {
        return Err(Error::SizeLimit {
            size: dim,
            limit: DENSE_ORACLE_LIMIT,
        });
    }
    if rhs.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: rhs.len(),
        });
    }
    let a = dense_system(g, m, mu);
    let x = match mode {
        SolveMode::Plain => linalg::cholesky_solve(&a, rhs)?,
        SolveMode::Centered => {
            let p = dense_centering(n, t);
            let pap = p.matmul(&a).matmul(&p);
            let eig = linalg::symmetric_eigen(&pap)?;
            let cutoff = 1e-10 * eig.max().abs();
            let prhs = p.matvec(rhs);
            let mut x = vec![0.0; dim];
            for (k, &lambda) in eig.values.iter().enumerate() {
                if lambda <= cutoff {
                    continue;
                }
                let coef: f64 = (0..dim).map(|i| eig.vectors[(i, k)] * prhs[i]).sum::<f64>() / lambda;
                for (i, xi) in x.iter_mut().enumerate() {
                    *xi += coef * eig.vectors[(i, k)];
                }
            }
            x
        }
    };
    StackedSignal::new(n, t, x)
}

/// Dense solution of the normal equations from observations `y`.
pub fn dense_oracle_solve(
    g: &Graph,
    m: &MeasurementSet,
    y: &[f64],
    mu: f64,
    mode: SolveMode,
) -> Result<StackedSignal> {
    check_problem(g, m, y)?;
    let rhs = m.design_apply_transpose(y)?;
    dense_oracle_apply_inverse(g, m, rhs.as_slice(), mu, mode)
}
