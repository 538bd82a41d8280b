#![allow(dead_code)]

use graphsmooth::graph::{self, Graph, GraphKind, StackedSignal};
use graphsmooth::linalg::DenseMatrix;
use graphsmooth::measurement::{Block, MeasurementSet};
use graphsmooth::SeededStream;

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

pub fn kind_from(idx: usize) -> GraphKind {
    [GraphKind::Complete, GraphKind::Star, GraphKind::Path][idx % 3]
}

/// Complete, star, path or an Erdős–Rényi graph (possibly disconnected).
pub fn any_graph(idx: usize, t: usize, rng: &mut SeededStream) -> Graph {
    if idx % 4 == 3 {
        graph::build_erdos_renyi(t, 0.4, rng).unwrap()
    } else {
        graph::build(kind_from(idx), t).unwrap()
    }
}

pub fn random_signal(n: usize, t: usize, rng: &mut SeededStream) -> StackedSignal {
    StackedSignal::new(n, t, (0..n * t).map(|_| rng.standard_normal()).collect()).unwrap()
}

pub fn random_vec(len: usize, rng: &mut SeededStream) -> Vec<f64> {
    (0..len).map(|_| rng.standard_normal()).collect()
}

/// Gaussian blocks with 0 to 2 rows, no rank condition.
pub fn random_design(n: usize, t: usize, rng: &mut SeededStream) -> MeasurementSet {
    let blocks = (0..t)
        .map(|_| Block {
            rows: (0..rng.index(3))
                .map(|_| (0..n).map(|j| (j, rng.standard_normal())).collect())
                .collect(),
        })
        .collect();
    MeasurementSet::new(n, blocks).unwrap()
}

pub fn dense_kron_laplacian(g: &Graph, n: usize) -> DenseMatrix {
    g.laplacian_dense().kron(&DenseMatrix::identity(n))
}
