//! Spectral lower bounds on `λ_min(μ(L⊗Iₙ) + CᵀC)`, the resulting
//! bias/variance error bounds, and penalty (`μ*`) selection rules.
//!
//! All bounds are driven by three scalars:
//!
//! * `b1 ≤ λ_{T−1}`, the Fiedler value of the graph,
//! * `b2 ≤ λ_min(O_TᵀO_T)/T` (or `λ_{n−1}(O_TᵀO_T)/T` for incidence designs),
//! * `b3 ≥ 2‖C‖₂·√(λ_max(O_TᵀO_T)/T)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphKind, LaplacianSpectrum};
use crate::measurement::{GramSummary, MeasurementSet};
use crate::{graph, linalg};

/// Default `c₁` of the complete-graph penalty rules.
pub const C1_COMPLETE: f64 = 2.0;
/// Default `c₁` of the star-graph penalty rules.
pub const C1_STAR: f64 = 3.0;
/// Default constant of the synchronization penalty rules.
pub const C2_SYNC: f64 = 2.0;
/// Failure probability used for `γ_{n,T}`, independent of the estimator's `δ`.
pub const GAMMA_DELTA: f64 = 0.05;

/// Relative eigenvalue threshold below which the Gram sum counts as singular.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub mu: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    /// `λ_min(CᵀC)`, or `λ_{T(n−1)}(CᵀC)` in the synchronization setting.
    pub lambda_min_ctc: f64,
}

impl BoundInputs {
    pub fn new(mu: f64, b1: f64, b2: f64, b3: f64, lambda_min_ctc: f64) -> Result<Self> {
        if !(b1 > 0.0 && b2 > 0.0 && b3 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "b1, b2, b3 must be positive (got {b1}, {b2}, {b3})"
            )));
        }
        if b2 >= b3 {
            return Err(Error::InvariantViolation(format!("b2 = {b2} must be < b3 = {b3}")));
        }
        if !(mu >= 0.0) {
            return Err(Error::InvalidParameter(format!("mu = {mu} must be ≥ 0")));
        }
        if !(lambda_min_ctc >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda_min(CᵀC) = {lambda_min_ctc} must be ≥ 0"
            )));
        }
        Ok(Self {
            mu,
            b1,
            b2,
            b3,
            lambda_min_ctc,
        })
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    /// `μ` at which the two branches of `λ̄′` meet:
    /// `μ b1 = b2 + (b3² − b2²)/(2 b2)`.
    pub fn regime_threshold_mu(&self) -> f64 {
        (self.b2 + (self.b3 * self.b3 - self.b2 * self.b2) / (2.0 * self.b2)) / self.b1
    }

    /// `μ` from which `λ̄′(μ) ≥ b2/4` is guaranteed: `μ b1 ≥ b2 + b3²/b2`.
    pub fn guarantee_mu(&self) -> f64 {
        (self.b2 + self.b3 * self.b3 / self.b2) / self.b1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SmallMu,
    LargeMu,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaBarPrime {
    pub value: f64,
    pub regime: Regime,
}

/// Closed-form lower bound `λ̄′(μ)`.
///
/// Linear in `μ` below the regime threshold, saturating towards `b2/2`
/// above it. The threshold itself uses the large-μ branch.
pub fn lambda_bar_prime(inputs: &BoundInputs) -> Result<LambdaBarPrime> {
    let BoundInputs { mu, b1, b2, b3, .. } = *inputs;
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu = {mu} must be > 0")));
    }
    if b2 >= b3 {
        return Err(Error::InvariantViolation(format!("b2 = {b2} must be < b3 = {b3}")));
    }
    let x = mu * b1;
    if x < b2 + (b3 * b3 - b2 * b2) / (2.0 * b2) {
        return Ok(LambdaBarPrime {
            value: b2 * b2 / (2.0 * (b2 * b2 + b3 * b3)) * x,
            regime: Regime::SmallMu,
        });
    }
    Ok(LambdaBarPrime {
        value: large_mu_branch(x, b2, b3),
        regime: Regime::LargeMu,
    })
}

/// Large-μ branch of `λ̄′` as a function of `x = μ b1`.
pub(crate) fn large_mu_branch(x: f64, b2: f64, b3: f64) -> f64 {
    let d = x - b2;
    let r = (b3 * b3 + d * d).sqrt();
    0.25 * (1.0 - d / r) * x + 0.25 * b2 + (b2 * d - b3 * b3) / (4.0 * r)
}

/// Small-μ branch of `λ̄′` as a function of `x = μ b1`.
pub(crate) fn small_mu_branch(x: f64, b2: f64, b3: f64) -> f64 {
    b2 * b2 / (2.0 * (b2 * b2 + b3 * b3)) * x
}

/// `λ̄(μ) = max{λ̄′(μ), λ_min(CᵀC)}`.
pub fn lambda_bar(inputs: &BoundInputs) -> Result<f64> {
    Ok(lambda_bar_prime(inputs)?.value.max(inputs.lambda_min_ctc))
}

/// Derives `b1, b2, b3` and `λ_min(CᵀC)` from a concrete problem, using the
/// exact spectral quantities as the bounds.
///
/// With `sync` set, the Gram sum's second-smallest eigenvalue replaces its
/// smallest and per-block `λ_{n−1}` replaces per-block `λ_min`.
pub fn bound_inputs_from(
    g: &Graph,
    m: &MeasurementSet,
    summary: &GramSummary,
    mu: f64,
    sync: bool,
) -> Result<BoundInputs> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let t = g.vertex_count() as f64;
    let b1 = graph::fiedler_value(g)?;
    let relevant = if sync {
        summary.lambda_second_min
    } else {
        summary.lambda_min
    };
    if relevant <= RANK_TOL * summary.lambda_max || relevant <= 0.0 {
        let msg = format!("relevant Gram eigenvalue {relevant:e} is numerically zero");
        return Err(if sync {
            Error::UnderDetermined(msg)
        } else {
            Error::SingularSystem(msg)
        });
    }
    let b2 = relevant / t;
    let b3 = 2.0 * summary.design_norm * (summary.lambda_max / t).sqrt();
    let lambda_min_ctc = m
        .block_min_eigenvalues(sync)?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let lambda_min_ctc = if lambda_min_ctc.is_finite() {
        lambda_min_ctc
    } else {
        0.0
    };
    BoundInputs::new(mu, b1, b2, b3, lambda_min_ctc)
}

/// How the variance term's confidence factor is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceForm {
    /// `40 n σ² ‖C‖₂² (…) log(1/δ)`
    #[default]
    Theorem,
    /// `8 n σ² ‖C‖₂² (…) (1 + 4 log(1/δ))`, the sharper intermediate form.
    Lemma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lambda_bar_prime: f64,
    pub lambda_bar: f64,
    pub regime: Regime,
    pub bias_bound: f64,
    pub variance_bound: f64,
    pub total_bound: f64,
    pub delta: f64,
}

/// Bias bound `4 μ S_T / λ̄(μ)`.
pub fn bias_bound(mu: f64, lambda_bar: f64, s_t: f64) -> f64 {
    4.0 * mu * s_t / lambda_bar
}

/// `Σ_{t<T} 1/(λ̄ + μλ_t)² + 1/λ̄²`, the spectral sum shared by both variance forms.
pub fn variance_spectral_sum(lambda_bar: f64, mu: f64, spectrum: &LaplacianSpectrum) -> f64 {
    let ev = &spectrum.eigenvalues;
    let head = &ev[..ev.len().saturating_sub(1)];
    head.iter()
        .map(|&l| 1.0 / (lambda_bar + mu * l).powi(2))
        .sum::<f64>()
        + 1.0 / (lambda_bar * lambda_bar)
}

pub fn variance_bound(
    lambda_bar: f64,
    mu: f64,
    spectrum: &LaplacianSpectrum,
    n: usize,
    sigma: f64,
    design_norm: f64,
    delta: f64,
    form: VarianceForm,
) -> f64 {
    let base = n as f64 * sigma * sigma * design_norm * design_norm
        * variance_spectral_sum(lambda_bar, mu, spectrum);
    let log_term = (1.0 / delta).ln();
    match form {
        VarianceForm::Theorem => 40.0 * base * log_term,
        VarianceForm::Lemma => 8.0 * base * (1.0 + 4.0 * log_term),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn error_bound(
    inputs: &BoundInputs,
    spectrum: &LaplacianSpectrum,
    n: usize,
    sigma: f64,
    design_norm: f64,
    s_t: f64,
    delta: f64,
) -> Result<BoundReport> {
    error_bound_with(inputs, spectrum, n, sigma, design_norm, s_t, delta, VarianceForm::Theorem)
}

#[allow(clippy::too_many_arguments)]
pub fn error_bound_with(
    inputs: &BoundInputs,
    spectrum: &LaplacianSpectrum,
    n: usize,
    sigma: f64,
    design_norm: f64,
    s_t: f64,
    delta: f64,
    form: VarianceForm,
) -> Result<BoundReport> {
    let e_inv = (-1.0_f64).exp();
    if !(delta > 0.0 && delta < e_inv) {
        return Err(Error::InvalidParameter(format!("delta = {delta} not in (0, 1/e)")));
    }
    if sigma < 0.0 || s_t < 0.0 || design_norm < 0.0 {
        return Err(Error::InvalidParameter(
            "sigma, S_T and ‖C‖₂ must be non-negative".into(),
        ));
    }
    let lbp = lambda_bar_prime(inputs)?;
    let lambda_bar = lbp.value.max(inputs.lambda_min_ctc);
    let bias_bound = bias_bound(inputs.mu, lambda_bar, s_t);
    let variance_bound =
        variance_bound(lambda_bar, inputs.mu, spectrum, n, sigma, design_norm, delta, form);
    Ok(BoundReport {
        lambda_bar_prime: lbp.value,
        lambda_bar,
        regime: lbp.regime,
        bias_bound,
        variance_bound,
        total_bound: bias_bound + variance_bound,
        delta,
    })
}

fn require_positive(pairs: &[(&str, f64)]) -> Result<()> {
    for &(name, v) in pairs {
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!("{name} = {v} must be > 0")));
        }
    }
    Ok(())
}

fn require_nonneg(pairs: &[(&str, f64)]) -> Result<()> {
    for &(name, v) in pairs {
        if !(v >= 0.0) {
            return Err(Error::InvalidParameter(format!("{name} = {v} must be ≥ 0")));
        }
    }
    Ok(())
}

/// `μ*` for the complete graph given bounds `lmin ≤ λ_min(O_TᵀO_T)` and
/// `lmax ≥ λ_max(O_TᵀO_T)`.
#[allow(clippy::too_many_arguments)]
pub fn mu_star_complete(
    lmin: f64,
    lmax: f64,
    n: usize,
    sigma: f64,
    design_norm: f64,
    s_t: f64,
    t: usize,
    c1: f64,
) -> Result<f64> {
    require_positive(&[("lmin", lmin), ("lmax", lmax), ("S_T", s_t), ("c1", c1)])?;
    require_nonneg(&[("sigma", sigma), ("design_norm", design_norm)])?;
    let tf = t as f64;
    let scale = 2.0 * n as f64 * sigma * sigma * design_norm * design_norm;
    let first = scale.cbrt() * (lmin / s_t).cbrt() / tf.powf(2.0 / 3.0) - lmin / (tf * tf);
    let second = c1 / tf * (lmin / tf + design_norm * design_norm * lmax / lmin);
    Ok(first.max(second))
}

/// `μ*` for the star graph; same inputs as [`mu_star_complete`].
#[allow(clippy::too_many_arguments)]
pub fn mu_star_star_graph(
    lmin: f64,
    lmax: f64,
    n: usize,
    sigma: f64,
    design_norm: f64,
    s_t: f64,
    t: usize,
    c1: f64,
) -> Result<f64> {
    require_positive(&[("lmin", lmin), ("lmax", lmax), ("S_T", s_t), ("c1", c1)])?;
    require_nonneg(&[("sigma", sigma), ("design_norm", design_norm)])?;
    let tf = t as f64;
    let scale = 2.0 * n as f64 * sigma * sigma * design_norm * design_norm;
    let first = scale.cbrt() * lmin.cbrt() / s_t.cbrt() - lmin / tf;
    let second = c1 * (lmin / tf + design_norm * design_norm * lmax / lmin);
    Ok(first.max(second))
}

/// Whether `T ≥ (8n/θ) log(n/δ)`, the sample size under which the sparse
/// random design is well conditioned with probability `1 − 2δ`.
pub fn rand_samp_sample_size_ok(theta: f64, t: usize, n: usize, delta: f64) -> bool {
    t as f64 >= 8.0 * n as f64 / theta * (n as f64 / delta).ln()
}

/// `μ*` for the sparse random design on a complete or star graph.
pub fn mu_star_rand_samp(
    theta: f64,
    t: usize,
    n: usize,
    sigma: f64,
    s_t: f64,
    c1: f64,
    kind: GraphKind,
) -> Result<f64> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidParameter(format!("theta = {theta} not in (0, 1]")));
    }
    require_positive(&[("S_T", s_t), ("c1", c1)])?;
    require_nonneg(&[("sigma", sigma)])?;
    let tf = t as f64;
    let nf = n as f64;
    let s23 = sigma.powf(2.0 / 3.0);
    match kind {
        GraphKind::Complete => {
            let first = s23 * (theta / (tf * s_t)).cbrt() - theta / (tf * nf);
            Ok(first.max(c1 / tf))
        }
        GraphKind::Star => {
            let first = s23 * theta.cbrt() * tf.cbrt() / s_t.powf(2.0 / 3.0) - theta / nf;
            Ok(first.max(c1))
        }
        other => Err(Error::InvalidParameter(format!(
            "no penalty rule for graph kind `{other}`"
        ))),
    }
}

/// `γ_{n,T} = min{√(2n p_max) + (2n log(nT/δ))^{1/4}, √(2n)}`, a high-probability
/// bound on `‖C‖₂` for Erdős–Rényi incidence layers.
pub fn gamma_nt(n: usize, p_max: f64, t: usize, delta: f64) -> f64 {
    let nf = n as f64;
    let a = (2.0 * nf * p_max).sqrt() + (2.0 * nf * (nf * t as f64 / delta).ln()).powf(0.25);
    a.min((2.0 * nf).sqrt())
}

/// `μ*` for Erdős–Rényi incidence layers on a complete or star graph.
#[allow(clippy::too_many_arguments)]
pub fn mu_star_sync(
    p_sum: f64,
    gamma: f64,
    n: usize,
    sigma: f64,
    s_t: f64,
    t: usize,
    c2: f64,
    kind: GraphKind,
) -> Result<f64> {
    require_positive(&[("p_sum", p_sum), ("gamma", gamma), ("S_T", s_t), ("c2", c2)])?;
    require_nonneg(&[("sigma", sigma)])?;
    let tf = t as f64;
    let nf = n as f64;
    let lead = (nf * sigma * gamma).powf(2.0 / 3.0);
    let second = c2 / tf * (nf * p_sum / tf + gamma * gamma);
    let first = match kind {
        GraphKind::Complete => lead * (p_sum / (tf * tf * s_t)).cbrt() - nf * p_sum / (tf * tf),
        GraphKind::Star => lead * (p_sum / s_t).cbrt() - nf * p_sum / tf,
        other => {
            return Err(Error::InvalidParameter(format!(
                "no penalty rule for graph kind `{other}`"
            )))
        }
    };
    Ok(first.max(second))
}

/// Dense `μ(L⊗Iₙ) + CᵀC`. Used by the verification sweeps.
pub fn dense_system_matrix(g: &Graph, m: &MeasurementSet, mu: f64) -> linalg::DenseMatrix {
    let n = m.n();
    let mut a = g.laplacian_dense().kron(&linalg::DenseMatrix::identity(n));
    a.scale(mu);
    let c = m.dense_design();
    a.add_assign(&c.gram());
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_complete, build_star, SpectrumSource};
    use crate::measurement::{gram_summary, sample_er_layers, Block};
    use crate::rng::SeededStream;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn small_mu_example() {
        let inp = BoundInputs::new(1.0, 1.0, 1.0, 2.0, 0.0).unwrap();
        let l = lambda_bar_prime(&inp).unwrap();
        assert_eq!(l.regime, Regime::SmallMu);
        assert!((l.value - 0.1).abs() < 1e-15);
    }

    #[test]
    fn guarantee_clause() {
        let inp = BoundInputs::new(1.0, 1.0, 1.0, 2.0, 0.0).unwrap();
        let mu = inp.guarantee_mu();
        for k in [1.0, 1.5, 10.0, 1e4] {
            let v = lambda_bar_prime(&inp.with_mu(mu * k)).unwrap().value;
            assert!(v >= 0.25, "{v}");
        }
    }

    #[test]
    fn small_mu_slope() {
        let inp = BoundInputs::new(1e-9, 2.0, 0.5, 3.0, 0.0).unwrap();
        let slope = 0.25 * 2.0 / (2.0 * (0.25 + 9.0));
        let v = lambda_bar_prime(&inp).unwrap().value;
        assert!(rel(v / 1e-9, slope) < 1e-12);
    }

    #[test]
    fn threshold_uses_large_branch_and_is_continuous() {
        let inp = BoundInputs::new(1.0, 1.3, 0.7, 1.9, 0.0).unwrap();
        let mu = inp.regime_threshold_mu();
        let at = lambda_bar_prime(&inp.with_mu(mu)).unwrap();
        assert_eq!(at.regime, Regime::LargeMu);
        let x = mu * inp.b1;
        assert!(rel(small_mu_branch(x, 0.7, 1.9), large_mu_branch(x, 0.7, 1.9)) < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            BoundInputs::new(1.0, 1.0, 2.0, 2.0, 0.0),
            Err(Error::InvariantViolation(_))
        ));
        assert!(BoundInputs::new(1.0, 0.0, 1.0, 2.0, 0.0).is_err());
        let inp = BoundInputs::new(0.0, 1.0, 1.0, 2.0, 0.0).unwrap();
        assert!(matches!(lambda_bar_prime(&inp), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn lambda_bar_takes_max() {
        let inp = BoundInputs::new(1.0, 1.0, 1.0, 2.0, 0.7).unwrap();
        assert_eq!(lambda_bar(&inp).unwrap(), 0.7);
    }

    fn complete_theta_one(t: usize) -> (Graph, MeasurementSet) {
        let g = build_complete(t).unwrap();
        let blocks = (0..t).map(|_| Block { rows: vec![vec![(0, 1.0)]] }).collect();
        (g, MeasurementSet::new(1, blocks).unwrap())
    }

    #[test]
    fn bound_inputs_complete_sparse_rows() {
        let (g, m) = complete_theta_one(4);
        let s = gram_summary(&m).unwrap();
        let inp = bound_inputs_from(&g, &m, &s, 1.0, false).unwrap();
        // Fiedler value of K_4 is 4
        assert_eq!(inp.b1, 4.0);
        assert_eq!(inp.b2, 1.0);
        assert_eq!(inp.b3, 2.0);
        assert_eq!(inp.lambda_min_ctc, 1.0);
    }

    #[test]
    fn bound_inputs_star_fiedler() {
        let g = build_star(3).unwrap();
        let blocks = (0..3).map(|_| Block { rows: vec![vec![(0, 1.0)]] }).collect();
        let m = MeasurementSet::new(1, blocks).unwrap();
        let s = gram_summary(&m).unwrap();
        let inp = bound_inputs_from(&g, &m, &s, 1.0, false).unwrap();
        assert!((inp.b1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bound_inputs_incidence_needs_sync() {
        let g = build_complete(3).unwrap();
        let m = sample_er_layers(4, &[1.0; 3], &mut SeededStream::new(1)).unwrap();
        let s = gram_summary(&m).unwrap();
        assert!(matches!(
            bound_inputs_from(&g, &m, &s, 1.0, false),
            Err(Error::SingularSystem(_))
        ));
        let inp = bound_inputs_from(&g, &m, &s, 1.0, true).unwrap();
        // every layer is K_4: λ_{n−1}(gram) = 3·4, per-block λ_{n−1} = 4
        assert!((inp.b2 - 4.0).abs() < 1e-12);
        assert!((inp.lambda_min_ctc - 4.0).abs() < 1e-12);
    }

    #[test]
    fn bound_inputs_disconnected() {
        let g = Graph::from_edges(3, [(0, 1)], GraphKind::Custom).unwrap();
        let blocks = (0..3).map(|_| Block { rows: vec![vec![(0, 1.0)]] }).collect();
        let m = MeasurementSet::new(1, blocks).unwrap();
        let s = gram_summary(&m).unwrap();
        assert!(matches!(
            bound_inputs_from(&g, &m, &s, 1.0, false),
            Err(Error::Disconnected)
        ));
    }

    fn spec(values: &[f64]) -> LaplacianSpectrum {
        LaplacianSpectrum {
            eigenvalues: values.to_vec(),
            source: SpectrumSource::ClosedForm,
        }
    }

    #[test]
    fn error_bound_vanishes_without_noise_or_variation() {
        let inp = BoundInputs::new(1.0, 1.0, 1.0, 2.0, 0.0).unwrap();
        let r = error_bound(&inp, &spec(&[3.0, 3.0, 3.0, 0.0]), 1, 0.0, 1.0, 0.0, 0.1).unwrap();
        assert_eq!(r.total_bound, 0.0);
    }

    #[test]
    fn error_bound_linear_in_s_t() {
        let inp = BoundInputs::new(1.0, 1.0, 1.0, 2.0, 0.0).unwrap();
        let s = spec(&[3.0, 3.0, 3.0, 0.0]);
        let a = error_bound(&inp, &s, 2, 1.0, 1.0, 1.5, 0.1).unwrap();
        let b = error_bound(&inp, &s, 2, 1.0, 1.0, 3.0, 0.1).unwrap();
        assert_eq!(b.bias_bound, 2.0 * a.bias_bound);
        assert_eq!(b.variance_bound, a.variance_bound);
        assert_eq!(a.total_bound, a.bias_bound + a.variance_bound);
    }

    #[test]
    fn error_bound_hand_arithmetic() {
        // λ̄ = 1 via λ_min(CᵀC) = 1 dominating λ̄′ ≈ 0.29
        let inp = BoundInputs::new(1.0, 3.0, 1.0, 2.0, 1.0).unwrap();
        let delta = (-1.0_f64).exp() * (1.0 - 1e-15);
        let r = error_bound(&inp, &spec(&[3.0, 3.0, 3.0, 0.0]), 1, 1.0, 1.0, 1.0, delta).unwrap();
        assert_eq!(r.lambda_bar, 1.0);
        assert!((r.bias_bound - 4.0).abs() < 1e-12);
        assert!(rel(r.variance_bound, 47.5) < 1e-12);

        // the true K_4 spectrum is (4,4,4,0): 40·(3/25 + 1) = 44.8
        let real = graph::laplacian_spectrum(&build_complete(4).unwrap()).unwrap();
        let r = error_bound(&inp, &real, 1, 1.0, 1.0, 1.0, delta).unwrap();
        assert!(rel(r.variance_bound, 44.8) < 1e-12);
    }

    #[test]
    fn error_bound_delta_range() {
        let inp = BoundInputs::new(1.0, 1.0, 1.0, 2.0, 0.0).unwrap();
        let s = spec(&[1.0, 0.0]);
        assert!(error_bound(&inp, &s, 1, 1.0, 1.0, 1.0, 0.5).is_err());
        assert!(error_bound(&inp, &s, 1, 1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn lemma_form_is_tighter_for_small_delta() {
        let inp = BoundInputs::new(1.0, 1.0, 1.0, 2.0, 0.0).unwrap();
        let s = spec(&[2.0, 1.0, 0.0]);
        let th = error_bound_with(&inp, &s, 2, 1.0, 1.0, 1.0, 0.01, VarianceForm::Theorem).unwrap();
        let le = error_bound_with(&inp, &s, 2, 1.0, 1.0, 1.0, 0.01, VarianceForm::Lemma).unwrap();
        assert!(le.variance_bound < th.variance_bound);
    }

    #[test]
    fn mu_star_complete_cases() {
        // lmin = lmax = T = 8, ‖C‖ = 1, n = σ = S_T = 1, c1 = 2:
        // first = 2^{1/3}·8^{1/3}/8^{2/3} − 8/64 = 2^{4/3}/4 − 1/8, second = 0.5
        let v = mu_star_complete(8.0, 8.0, 1, 1.0, 1.0, 1.0, 8, 2.0).unwrap();
        let first = 2f64.powf(4.0 / 3.0) / 4.0 - 0.125;
        assert!(first > 0.5);
        assert!(rel(v, first) < 1e-12);

        // first branch negative → second branch
        let v = mu_star_complete(8.0, 8.0, 1, 0.0, 1.0, 1.0, 8, 2.0).unwrap();
        assert!(rel(v, 0.5) < 1e-12);

        assert!(mu_star_complete(0.0, 8.0, 1, 1.0, 1.0, 1.0, 8, 2.0).is_err());
        assert!(mu_star_complete(8.0, 8.0, 1, 1.0, 1.0, 0.0, 8, 2.0).is_err());
    }

    #[test]
    fn mu_star_complete_cube_root_homogeneity() {
        let lead = |sigma: f64| {
            let with = mu_star_complete(50.0, 60.0, 3, sigma, 1.0, 0.2, 40, 1e-9).unwrap();
            with + 50.0 / 1600.0
        };
        assert!(rel(lead(8f64.sqrt()), 2.0 * lead(1.0)) < 1e-12);
    }

    #[test]
    fn mu_star_star_cases() {
        let v = mu_star_star_graph(27.0, 27.0, 1, 1.0, 1.0, 1.0, 27, 1.0).unwrap();
        let want = 3.0 * 2f64.cbrt() - 1.0;
        assert!(rel(v, want) < 1e-12);
        assert!((v - 2.7798).abs() < 1e-4);

        let v = mu_star_star_graph(27.0, 27.0, 1, 0.0, 1.0, 1.0, 27, 1.0).unwrap();
        assert!(rel(v, 2.0) < 1e-12);
    }

    #[test]
    fn mu_star_rand_samp_cases() {
        assert!(rel(mu_star_rand_samp(0.5, 100, 5, 0.0, 3.0, 2.0, GraphKind::Complete).unwrap(), 0.02) < 1e-15);
        assert_eq!(mu_star_rand_samp(0.5, 100, 5, 0.0, 3.0, 3.0, GraphKind::Star).unwrap(), 3.0);

        let t = 1000usize;
        let s_t = (t as f64).sqrt();
        let v = mu_star_rand_samp(0.5, t, 5, 1.0, s_t, 2.0, GraphKind::Complete).unwrap();
        let want = (0.5 / (1000.0 * s_t)).cbrt() - 0.5 / 5000.0;
        assert!(rel(v, want) < 1e-12);
        assert!((v - 0.02500).abs() < 5e-5);

        assert!(mu_star_rand_samp(0.0, t, 5, 1.0, s_t, 2.0, GraphKind::Complete).is_err());
        assert!(mu_star_rand_samp(0.5, t, 5, 1.0, s_t, 2.0, GraphKind::Path).is_err());
    }

    #[test]
    fn sample_size_condition() {
        // (8·5/0.5)·log(100) ≈ 368.4
        assert!(rand_samp_sample_size_ok(0.5, 369, 5, 0.05));
        assert!(!rand_samp_sample_size_ok(0.5, 368, 5, 0.05));
    }

    #[test]
    fn gamma_takes_smaller_term() {
        assert!(rel(gamma_nt(50, 1.0, 1, 0.05), 10.0) < 1e-15);
        let small = gamma_nt(50, 0.001, 10, 0.05);
        let want = (0.1f64).sqrt() + (100.0 * (500.0f64 / 0.05).ln()).powf(0.25);
        assert!(want < 10.0);
        assert!(rel(small, want) < 1e-15);
    }

    #[test]
    fn mu_star_sync_cases() {
        let (p_sum, gamma, n, t, c2) = (2.0, 3.0, 10, 40, 2.0);
        let v = mu_star_sync(p_sum, gamma, n, 0.0, 1.0, t, c2, GraphKind::Complete).unwrap();
        let want = c2 / 40.0 * (10.0 * 2.0 / 40.0 + 9.0);
        assert!(rel(v, want) < 1e-15);

        for kind in [GraphKind::Complete, GraphKind::Star] {
            let mut prev = 0.0;
            for sigma in [0.0, 0.5, 1.0, 5.0, 50.0, 500.0] {
                let v = mu_star_sync(p_sum, gamma, n, sigma, 1.0, t, c2, kind).unwrap();
                assert!(v >= prev);
                prev = v;
            }
        }
        assert!(mu_star_sync(0.0, gamma, n, 1.0, 1.0, t, c2, GraphKind::Star).is_err());
    }
}
