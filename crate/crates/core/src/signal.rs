//! Ground-truth signal and noise generators.
//!
//! Each generator meets its smoothness budget `S_T` in expectation only, so
//! callers that need the realized value should measure it with
//! [`crate::graph::quadratic_variation`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphKind, StackedSignal};
use crate::rng::SeededStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetLaw {
    StarRecipe,
    CompleteRecipe,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessBudget {
    pub s_t: f64,
    pub law: BudgetLaw,
}

impl SmoothnessBudget {
    pub fn new(s_t: f64, law: BudgetLaw) -> Result<Self> {
        if !(s_t >= 0.0) || !s_t.is_finite() {
            return Err(Error::InvalidParameter(format!("S_T = {s_t} must be finite and ≥ 0")));
        }
        Ok(Self { s_t, law })
    }

    /// The recipe matching a graph family.
    pub fn for_kind(s_t: f64, kind: GraphKind) -> Result<Self> {
        let law = match kind {
            GraphKind::Star => BudgetLaw::StarRecipe,
            GraphKind::Complete => BudgetLaw::CompleteRecipe,
            _ => BudgetLaw::Custom,
        };
        Self::new(s_t, law)
    }

    /// Draws a signal following `self.law`. The custom law is a Gaussian
    /// random walk along node order.
    pub fn generate(&self, n: usize, t: usize, rng: &mut SeededStream) -> Result<StackedSignal> {
        match self.law {
            BudgetLaw::StarRecipe => gen_smooth_star(n, t, self.s_t, rng),
            BudgetLaw::CompleteRecipe => gen_smooth_complete(n, t, self.s_t, rng),
            BudgetLaw::Custom => gen_smooth_path(n, t, self.s_t, rng),
        }
    }
}

fn check_dims(n: usize, t: usize, s_t: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidSize(format!("signal dimension n = {n} must be ≥ 1")));
    }
    if t < 2 {
        return Err(Error::InvalidSize(format!("node count T = {t} must be ≥ 2")));
    }
    if !(s_t >= 0.0) || !s_t.is_finite() {
        return Err(Error::InvalidParameter(format!("S_T = {s_t} must be finite and ≥ 0")));
    }
    Ok(())
}

/// Number of "far" satellites in the star recipe, `min{⌊S_T⌋, T}`, capped
/// at `T − 1` so that node 0 always stays the center.
pub fn star_far_count(t: usize, s_t: f64) -> usize {
    (s_t.floor() as usize).min(t).min(t - 1)
}

/// Star recipe. Node 0 is the center with `x₀ ~ N(0, I/n)`. With
/// `α = √(S_T/T)` and `m` far satellites, the first `T − 1 − m` satellites
/// are `N(x₀, α²/n·I)` and the last `m` are `N(x₀ + 𝟙/√n, I/n)`.
pub fn gen_smooth_star(n: usize, t: usize, s_t: f64, rng: &mut SeededStream) -> Result<StackedSignal> {
    check_dims(n, t, s_t)?;
    let m = star_far_count(t, s_t);
    let nf = n as f64;
    let unit_sd = 1.0 / nf.sqrt();
    let near_sd = (s_t / t as f64).sqrt() / nf.sqrt();
    let shift = 1.0 / nf.sqrt();

    let mut x = StackedSignal::zeros(n, t);
    let center: Vec<f64> = (0..n).map(|_| rng.normal(0.0, unit_sd)).collect();
    x.block_mut(0).copy_from_slice(&center);
    for node in 1..t {
        let far = node >= t - m;
        let block = x.block_mut(node);
        for (v, &c) in block.iter_mut().zip(&center) {
            *v = if far {
                rng.normal(c + shift, unit_sd)
            } else {
                rng.normal(c, near_sd)
            };
        }
    }
    Ok(x)
}

/// `E[quadratic_variation]` of the star recipe: `(T − 1 − m)S_T/T + 2m`.
pub fn star_expected_variation(t: usize, s_t: f64) -> f64 {
    let m = star_far_count(t, s_t);
    (t - 1 - m) as f64 * s_t / t as f64 + 2.0 * m as f64
}

/// Complete-graph recipe: two clusters around `0` and `z = √S_T/(T√n)·𝟙`,
/// each coordinate with variance `S_T/(T²n)`.
pub fn gen_smooth_complete(
    n: usize,
    t: usize,
    s_t: f64,
    rng: &mut SeededStream,
) -> Result<StackedSignal> {
    check_dims(n, t, s_t)?;
    let nf = n as f64;
    let tf = t as f64;
    let z = s_t.sqrt() / (tf * nf.sqrt());
    let sd = s_t.sqrt() / (tf * nf.sqrt());
    let half = t / 2;
    let mut x = StackedSignal::zeros(n, t);
    for node in 0..t {
        let mean = if node < half { 0.0 } else { z };
        for v in x.block_mut(node) {
            *v = rng.normal(mean, sd);
        }
    }
    Ok(x)
}

/// `E[quadratic_variation]` of the complete recipe on the complete graph:
/// `T(T−1)S_T/T² + ⌈T/2⌉⌊T/2⌋ S_T/T²`.
pub fn complete_expected_variation(t: usize, s_t: f64) -> f64 {
    let tf = t as f64;
    let lo = (t / 2) as f64;
    let hi = (t - t / 2) as f64;
    (tf * (tf - 1.0) + lo * hi) * s_t / (tf * tf)
}

/// Random walk along node order: `x₀ ~ N(0, I/n)` and each increment
/// `N(0, S_T/((T−1)n)·I)`, so the path-graph quadratic variation has
/// expectation `S_T`.
pub fn gen_smooth_path(n: usize, t: usize, s_t: f64, rng: &mut SeededStream) -> Result<StackedSignal> {
    check_dims(n, t, s_t)?;
    let nf = n as f64;
    let step_sd = (s_t / ((t - 1) as f64 * nf)).sqrt();
    let mut x = StackedSignal::zeros(n, t);
    for v in x.block_mut(0) {
        *v = rng.normal(0.0, 1.0 / nf.sqrt());
    }
    for node in 1..t {
        for k in 0..n {
            let prev = x.block(node - 1)[k];
            x.block_mut(node)[k] = rng.normal(prev, step_sd);
        }
    }
    Ok(x)
}

pub fn center_blocks(x: &StackedSignal) -> StackedSignal {
    x.center_blocks()
}

/// `len` i.i.d. `N(0, σ²)` draws.
pub fn gen_noise(len: usize, sigma: f64, rng: &mut SeededStream) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} must be finite and ≥ 0")));
    }
    if sigma == 0.0 {
        return Ok(vec![0.0; len]);
    }
    Ok((0..len).map(|_| sigma * rng.standard_normal()).collect())
}
