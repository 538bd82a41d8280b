//! Per-node measurement matrices `C_t`, the block-diagonal design `C`, and
//! spectral summaries of the stacked matrix `O_T = [C_1ᵀ ⋯ C_Tᵀ]ᵀ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{self, Graph, StackedSignal};
use crate::linalg::{self, DenseMatrix};
use crate::rng::SeededStream;

/// One measurement row in sparse `(column, value)` form.
pub type SparseRow = Vec<(usize, f64)>;

/// The rows of a single `C_t`. Zero rows are kept; an empty block is an
/// unmeasured node (`m_t = 0`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Block {
    pub rows: Vec<SparseRow>,
}

impl Block {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Dense `m_t × n` copy.
    pub fn to_dense(&self, n: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows.len(), n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// `C_tᵀ C_t` as a dense `n × n` matrix.
    pub fn gram(&self, n: usize) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(n, n);
        for row in &self.rows {
            for &(i, a) in row {
                for &(j, b) in row {
                    g[(i, j)] += a * b;
                }
            }
        }
        g
    }

    /// Largest singular value of `C_t`.
    pub fn spectral_norm(&self, n: usize) -> f64 {
        match self.rows.len() {
            0 => 0.0,
            1 => self.rows[0].iter().map(|&(_, v)| v * v).sum::<f64>().sqrt(),
            _ => linalg::power_iteration_max(&self.gram(n)).max(0.0).sqrt(),
        }
    }
}

/// Sum and maximum of per-layer Erdős–Rényi probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerProbabilities {
    pub p_sum: f64,
    pub p_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    n: usize,
    blocks: Vec<Block>,
    layer_probabilities: Option<LayerProbabilities>,
}

impl MeasurementSet {
    pub fn new(n: usize, blocks: Vec<Block>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("signal dimension must be positive".into()));
        }
        for (t, b) in blocks.iter().enumerate() {
            for row in &b.rows {
                if let Some(&(j, _)) = row.iter().find(|(j, _)| *j >= n) {
                    return Err(Error::InvalidParameter(format!(
                        "block {t}: column {j} out of range for n = {n}"
                    )));
                }
            }
        }
        Ok(Self {
            n,
            blocks,
            layer_probabilities: None,
        })
    }

    /// Builds from dense `m_t × n` blocks; exact zeros are dropped.
    pub fn from_dense_blocks(n: usize, blocks: &[DenseMatrix]) -> Result<Self> {
        let mut out = Vec::with_capacity(blocks.len());
        for (t, b) in blocks.iter().enumerate() {
            if b.cols() != n && b.rows() > 0 {
                return Err(Error::InvalidParameter(format!(
                    "block {t} has {} columns, expected {n}",
                    b.cols()
                )));
            }
            let rows = (0..b.rows())
                .map(|i| {
                    b.row(i)
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| **v != 0.0)
                        .map(|(j, &v)| (j, v))
                        .collect()
                })
                .collect();
            out.push(Block { rows });
        }
        Self::new(n, out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn node_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn total_rows(&self) -> usize {
        self.blocks.iter().map(Block::row_count).sum()
    }

    pub fn layer_probabilities(&self) -> Option<LayerProbabilities> {
        self.layer_probabilities
    }

    /// True when every row has one `+1`, one `−1` and nothing else.
    pub fn is_incidence(&self) -> bool {
        self.blocks.iter().flat_map(|b| &b.rows).all(|row| {
            row.len() == 2 && {
                let mut vals = [row[0].1, row[1].1];
                vals.sort_by(f64::total_cmp);
                vals == [-1.0, 1.0] && row[0].0 != row[1].0
            }
        })
    }

    /// `O_TᵀO_T = Σ_t C_tᵀC_t`.
    pub fn gram(&self) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(self.n, self.n);
        for b in &self.blocks {
            for row in &b.rows {
                for &(i, a) in row {
                    for &(j, c) in row {
                        g[(i, j)] += a * c;
                    }
                }
            }
        }
        g
    }

    /// `‖C‖₂ = max_t ‖C_t‖₂`, since `C` is block diagonal.
    pub fn design_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.spectral_norm(self.n))
            .fold(0.0, f64::max)
    }

    /// Full dense block-diagonal `C` of shape `Σm_t × nT`.
    pub fn dense_design(&self) -> DenseMatrix {
        let mut c = DenseMatrix::zeros(self.total_rows(), self.n * self.node_count());
        let mut r = 0;
        for (t, b) in self.blocks.iter().enumerate() {
            for row in &b.rows {
                for &(j, v) in row {
                    c[(r, t * self.n + j)] += v;
                }
                r += 1;
            }
        }
        c
    }

    fn check_signal(&self, z: &StackedSignal) -> Result<()> {
        if z.block_size() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: z.block_size(),
            });
        }
        if z.node_count() != self.node_count() {
            return Err(Error::DimensionMismatch {
                expected: self.node_count(),
                actual: z.node_count(),
            });
        }
        Ok(())
    }

    /// `y = C z`, concatenated in node order.
    pub fn design_apply(&self, z: &StackedSignal) -> Result<Vec<f64>> {
        self.check_signal(z)?;
        let mut y = Vec::with_capacity(self.total_rows());
        for (b, zt) in self.blocks.iter().zip(z.blocks()) {
            for row in &b.rows {
                y.push(row.iter().map(|&(j, v)| v * zt[j]).sum());
            }
        }
        Ok(y)
    }

    /// `Cᵀ y`: block `t` receives `C_tᵀ y_t`.
    pub fn design_apply_transpose(&self, y: &[f64]) -> Result<StackedSignal> {
        if y.len() != self.total_rows() {
            return Err(Error::DimensionMismatch {
                expected: self.total_rows(),
                actual: y.len(),
            });
        }
        let n = self.n;
        let mut out = vec![0.0; n * self.node_count()];
        let mut r = 0;
        for (t, b) in self.blocks.iter().enumerate() {
            for row in &b.rows {
                let yr = y[r];
                r += 1;
                for &(j, v) in row {
                    out[t * n + j] += v * yr;
                }
            }
        }
        StackedSignal::new(n, self.node_count(), out)
    }

    /// Accumulates `CᵀC z` into `out` (added, not overwritten).
    pub(crate) fn normal_apply_add(&self, z: &[f64], out: &mut [f64]) {
        let n = self.n;
        for (t, b) in self.blocks.iter().enumerate() {
            let zt = &z[t * n..(t + 1) * n];
            let ot = &mut out[t * n..(t + 1) * n];
            for row in &b.rows {
                let s: f64 = row.iter().map(|&(j, v)| v * zt[j]).sum();
                if s != 0.0 {
                    for &(j, v) in row {
                        ot[j] += v * s;
                    }
                }
            }
        }
    }

    /// Diagonal of `CᵀC`.
    pub(crate) fn normal_diagonal(&self) -> Vec<f64> {
        let n = self.n;
        let mut d = vec![0.0; n * self.node_count()];
        for (t, b) in self.blocks.iter().enumerate() {
            for row in &b.rows {
                for &(j, v) in row {
                    d[t * n + j] += v * v;
                }
            }
        }
        d
    }

    /// Smallest eigenvalue of each `C_tᵀC_t`, or the second smallest when
    /// `second` is set. Blocks with too few rows are rank deficient and
    /// report zero without an eigensolve.
    pub fn block_min_eigenvalues(&self, second: bool) -> Result<Vec<f64>> {
        let n = self.n;
        let needed = if second { n.saturating_sub(1) } else { n };
        self.blocks
            .iter()
            .map(|b| {
                if b.row_count() < needed || (second && n < 2) {
                    return Ok(0.0);
                }
                let vals = linalg::symmetric_eigenvalues(&b.gram(n))?;
                let v = if second { vals[n - 2] } else { vals[n - 1] };
                Ok(v.max(0.0))
            })
            .collect()
    }
}

/// Spectral summary of `O_TᵀO_T` and `‖C‖₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramSummary {
    pub gram: DenseMatrix,
    /// All eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    pub lambda_min: f64,
    /// `λ_{n−1}`, the second smallest eigenvalue (equals `lambda_min` when `n = 1`).
    pub lambda_second_min: f64,
    pub lambda_max: f64,
    pub design_norm: f64,
}

pub fn gram_spectrum(m: &MeasurementSet) -> Result<(DenseMatrix, Vec<f64>)> {
    let gram = m.gram();
    let eigenvalues = linalg::symmetric_eigenvalues(&gram)?;
    Ok((gram, eigenvalues))
}

pub fn gram_summary(m: &MeasurementSet) -> Result<GramSummary> {
    let (gram, eigenvalues) = gram_spectrum(m)?;
    let n = eigenvalues.len();
    let lambda_min = eigenvalues[n - 1];
    let lambda_second_min = if n >= 2 { eigenvalues[n - 2] } else { lambda_min };
    Ok(GramSummary {
        lambda_min,
        lambda_second_min,
        lambda_max: eigenvalues[0],
        design_norm: m.design_norm(),
        gram,
        eigenvalues,
    })
}

/// Each node contributes one row: zero with probability `1 − θ`, otherwise
/// a canonical basis row `e_iᵀ` with `i` uniform.
pub fn sample_sparse_rows(
    n: usize,
    t: usize,
    theta: f64,
    rng: &mut SeededStream,
) -> Result<MeasurementSet> {
    if n == 0 || t == 0 {
        return Err(Error::InvalidSize(format!("need n ≥ 1 and T ≥ 1, got n = {n}, T = {t}")));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!("theta {theta} not in [0, 1]")));
    }
    let blocks = (0..t)
        .map(|_| {
            let row = if rng.bernoulli(theta) {
                vec![(rng.index(n), 1.0)]
            } else {
                Vec::new()
            };
            Block { rows: vec![row] }
        })
        .collect();
    MeasurementSet::new(n, blocks)
}

/// Incidence matrix of `g` with orientation `+1` at the smaller endpoint.
pub fn incidence_block(g: &Graph) -> Block {
    let rows = g
        .edges()
        .iter()
        .map(|&(i, j)| vec![(i, 1.0), (j, -1.0)])
        .collect();
    Block { rows }
}

/// Independent layers `G_t ~ G(n, p_t)`, each measured through its incidence matrix.
pub fn sample_er_layers(n: usize, p: &[f64], rng: &mut SeededStream) -> Result<MeasurementSet> {
    if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidParameter(format!("layer probability {bad} not in [0, 1]")));
    }
    if p.is_empty() {
        return Err(Error::InvalidSize("need at least one layer".into()));
    }
    let mut blocks = Vec::with_capacity(p.len());
    for &pt in p {
        let g = graph::build_erdos_renyi(n, pt, rng)?;
        blocks.push(incidence_block(&g));
    }
    let mut m = MeasurementSet::new(n, blocks)?;
    m.layer_probabilities = Some(LayerProbabilities {
        p_sum: p.iter().sum(),
        p_max: p.iter().copied().fold(0.0, f64::max),
    });
    Ok(m)
}
