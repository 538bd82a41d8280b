//! Undirected simple graphs, their Laplacians, and block signals living on
//! their vertices.
//!
//! Vertices are 0-based internally; the text formats in [`crate::io`] use
//! 1-based indices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};
use crate::rng::SeededStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Complete,
    Star,
    Path,
    ErdosRenyi,
    Custom,
}

impl std::fmt::Display for GraphKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GraphKind::Complete => "complete",
            GraphKind::Star => "star",
            GraphKind::Path => "path",
            GraphKind::ErdosRenyi => "erdos_renyi",
            GraphKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(GraphKind::Complete),
            "star" => Ok(GraphKind::Star),
            "path" => Ok(GraphKind::Path),
            "erdos_renyi" | "er" => Ok(GraphKind::ErdosRenyi),
            "custom" => Ok(GraphKind::Custom),
            other => Err(Error::InvalidParameter(format!("unknown graph kind `{other}`"))),
        }
    }
}

/// Undirected simple graph on `vertex_count` vertices.
///
/// Edges are stored as sorted `(i, j)` pairs with `i < j`, deduplicated and
/// in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
    kind: GraphKind,
}

impl Graph {
    /// Builds a graph from arbitrary pairs. Self-loops and out-of-range
    /// endpoints are rejected; duplicates (in either orientation) collapse.
    pub fn from_edges(
        vertex_count: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
        kind: GraphKind,
    ) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::InvalidSize("graph needs at least one vertex".into()));
        }
        let mut edges = Vec::new();
        for (a, b) in pairs {
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop at vertex {a}")));
            }
            if a >= vertex_count || b >= vertex_count {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) out of range for {vertex_count} vertices"
                )));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self {
            vertex_count,
            edges,
            kind,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertex_count];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn component_count(&self) -> usize {
        let adj = self.adjacency();
        let mut seen = vec![false; self.vertex_count];
        let mut components = 0;
        for start in 0..self.vertex_count {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// Dense `T × T` Laplacian `D − A`.
    pub fn laplacian_dense(&self) -> DenseMatrix {
        let t = self.vertex_count;
        let mut l = DenseMatrix::zeros(t, t);
        for &(a, b) in &self.edges {
            l[(a, a)] += 1.0;
            l[(b, b)] += 1.0;
            l[(a, b)] -= 1.0;
            l[(b, a)] -= 1.0;
        }
        l
    }
}

fn check_size(t: usize) -> Result<()> {
    if t < 2 {
        return Err(Error::InvalidSize(format!("need at least 2 vertices, got {t}")));
    }
    Ok(())
}

pub fn build_complete(t: usize) -> Result<Graph> {
    check_size(t)?;
    let pairs = (0..t).flat_map(|i| ((i + 1)..t).map(move |j| (i, j)));
    Graph::from_edges(t, pairs, GraphKind::Complete)
}

/// Star centered at vertex 0.
pub fn build_star(t: usize) -> Result<Graph> {
    check_size(t)?;
    Graph::from_edges(t, (1..t).map(|j| (0, j)), GraphKind::Star)
}

pub fn build_path(t: usize) -> Result<Graph> {
    check_size(t)?;
    Graph::from_edges(t, (0..t - 1).map(|i| (i, i + 1)), GraphKind::Path)
}

/// G(n, p): every pair `i < j`, visited in lexicographic order, is kept
/// with probability `p`.
pub fn build_erdos_renyi(n: usize, p: f64, rng: &mut SeededStream) -> Result<Graph> {
    check_size(n)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("edge probability {p} not in [0, 1]")));
    }
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.bernoulli(p) {
                pairs.push((i, j));
            }
        }
    }
    Graph::from_edges(n, pairs, GraphKind::ErdosRenyi)
}

pub fn build(kind: GraphKind, t: usize) -> Result<Graph> {
    match kind {
        GraphKind::Complete => build_complete(t),
        GraphKind::Star => build_star(t),
        GraphKind::Path => build_path(t),
        other => Err(Error::InvalidParameter(format!(
            "graph kind `{other}` has no deterministic constructor"
        ))),
    }
}

/// Column-stacked node signals: node `t` occupies `data[t*n .. (t+1)*n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedSignal {
    block_size: usize,
    node_count: usize,
    data: Vec<f64>,
}

impl StackedSignal {
    pub fn new(block_size: usize, node_count: usize, data: Vec<f64>) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidSize("block size must be positive".into()));
        }
        if data.len() != block_size * node_count {
            return Err(Error::DimensionMismatch {
                expected: block_size * node_count,
                actual: data.len(),
            });
        }
        Ok(Self {
            block_size,
            node_count,
            data,
        })
    }

    pub fn zeros(block_size: usize, node_count: usize) -> Self {
        Self {
            block_size,
            node_count,
            data: vec![0.0; block_size * node_count],
        }
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn block(&self, t: usize) -> &[f64] {
        &self.data[t * self.block_size..(t + 1) * self.block_size]
    }

    pub fn block_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[t * self.block_size..(t + 1) * self.block_size]
    }

    pub fn blocks(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.block_size)
    }

    /// Sum of squared differences to `other`.
    pub fn squared_distance(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Subtracts each block's mean from that block, i.e. applies
    /// `P = I_T ⊗ (Iₙ − 𝟙𝟙ᵀ/n)`.
    pub fn center_blocks(&self) -> Self {
        let mut out = self.clone();
        out.center_in_place();
        out
    }

    pub fn center_in_place(&mut self) {
        center_slice(&mut self.data, self.block_size);
    }
}

pub(crate) fn center_slice(data: &mut [f64], block_size: usize) {
    for block in data.chunks_exact_mut(block_size) {
        let mean = block.iter().sum::<f64>() / block_size as f64;
        block.iter_mut().for_each(|v| *v -= mean);
    }
}

fn check_signal(g: &Graph, z: &StackedSignal) -> Result<()> {
    if z.node_count != g.vertex_count {
        return Err(Error::DimensionMismatch {
            expected: g.vertex_count,
            actual: z.node_count,
        });
    }
    Ok(())
}

/// `(L ⊗ Iₙ) z` without forming the Kronecker product.
pub fn laplacian_apply(g: &Graph, z: &StackedSignal) -> Result<StackedSignal> {
    check_signal(g, z)?;
    let mut out = vec![0.0; z.len()];
    laplacian_apply_into(g, z.block_size, &z.data, &mut out);
    Ok(StackedSignal {
        block_size: z.block_size,
        node_count: z.node_count,
        data: out,
    })
}

/// Writes `(L ⊗ Iₙ) z` into `out` (overwritten).
pub(crate) fn laplacian_apply_into(g: &Graph, n: usize, z: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    if g.kind == GraphKind::Complete && g.edges.len() == g.vertex_count * (g.vertex_count - 1) / 2 {
        // L = T·I − 𝟙𝟙ᵀ
        let t = g.vertex_count as f64;
        let mut total = vec![0.0; n];
        for block in z.chunks_exact(n) {
            for (s, v) in total.iter_mut().zip(block) {
                *s += v;
            }
        }
        for (o, zb) in out.chunks_exact_mut(n).zip(z.chunks_exact(n)) {
            for k in 0..n {
                o[k] = t * zb[k] - total[k];
            }
        }
        return;
    }
    for &(a, b) in &g.edges {
        for k in 0..n {
            let d = z[a * n + k] - z[b * n + k];
            out[a * n + k] += d;
            out[b * n + k] -= d;
        }
    }
}

/// `Σ_{t,t'} ‖x_t − x_{t'}‖²` over the edges, i.e. `‖Mx‖²`.
pub fn quadratic_variation(g: &Graph, x: &StackedSignal) -> Result<f64> {
    check_signal(g, x)?;
    let n = x.block_size;
    let mut total = 0.0;
    for &(a, b) in &g.edges {
        let xa = &x.data[a * n..(a + 1) * n];
        let xb = &x.data[b * n..(b + 1) * n];
        total += xa.iter().zip(xb).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    ClosedForm,
    DenseSolver,
}

/// Laplacian eigenvalues sorted descending, `λ₁ ≥ … ≥ λ_T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplacianSpectrum {
    pub eigenvalues: Vec<f64>,
    pub source: SpectrumSource,
}

impl LaplacianSpectrum {
    /// `λ_{T−1}`; zero for a single vertex.
    pub fn fiedler(&self) -> f64 {
        let t = self.eigenvalues.len();
        if t < 2 {
            0.0
        } else {
            self.eigenvalues[t - 2]
        }
    }

    pub fn zero_count(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|v| v.abs() <= tol).count()
    }
}

pub fn laplacian_spectrum(g: &Graph) -> Result<LaplacianSpectrum> {
    let t = g.vertex_count;
    if g.kind == GraphKind::Complete && g.edges.len() == t * (t - 1) / 2 {
        let mut eigenvalues = vec![t as f64; t - 1];
        eigenvalues.push(0.0);
        return Ok(LaplacianSpectrum {
            eigenvalues,
            source: SpectrumSource::ClosedForm,
        });
    }
    let mut eigenvalues = linalg::symmetric_eigenvalues(&g.laplacian_dense())?;
    // the last eigenvalue is exactly zero in exact arithmetic
    if let Some(last) = eigenvalues.last_mut() {
        if last.abs() < 1e-10 {
            *last = 0.0;
        }
    }
    Ok(LaplacianSpectrum {
        eigenvalues,
        source: SpectrumSource::DenseSolver,
    })
}

pub fn fiedler_value(g: &Graph) -> Result<f64> {
    Ok(laplacian_spectrum(g)?.fiedler())
}
