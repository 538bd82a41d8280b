//! Small dense linear algebra: a row-major matrix, a cyclic Jacobi
//! eigensolver, Cholesky solves and power iteration.
//!
//! Everything here is sized for spectra of Gram sums, graph Laplacians with a
//! few hundred vertices, and dense verification oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::splitmix64;

/// Off-diagonal stopping threshold relative to the Frobenius norm.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// `Aᵀ A` for a (possibly rectangular) matrix.
    pub fn gram(&self) -> Self {
        self.transpose().matmul(self)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        Self::from_fn(r, c, |i, j| {
            self[(i / other.rows, j / other.cols)] * other[(i % other.rows, j % other.cols)]
        })
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Eigendecomposition of a symmetric matrix. Eigenvalues are sorted
/// descending; `vectors` holds the matching unit eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
    pub sweeps: usize,
}

impl SymmetricEigen {
    pub fn min(&self) -> f64 {
        *self.values.last().expect("empty spectrum")
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    /// `k`-th largest eigenvalue, 1-based (λ_1 ≥ λ_2 ≥ …).
    pub fn kth_largest(&self, k: usize) -> f64 {
        self.values[k - 1]
    }
}

/// Cyclic Jacobi eigensolver.
///
/// Sweeps over all off-diagonal pairs until the off-diagonal Frobenius norm
/// drops below `JACOBI_TOL · ‖A‖_F`, or `JACOBI_MAX_SWEEPS` is reached.
pub fn symmetric_eigen(a: &DenseMatrix) -> Result<SymmetricEigen> {
    if !a.is_square() {
        return Err(Error::InvalidSize(format!(
            "eigensolver needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut m = a.clone();
    // symmetrize to kill rounding asymmetry from assembled inputs
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    let mut v = DenseMatrix::identity(n);
    let threshold = JACOBI_TOL * m.frobenius_norm();

    let off_norm = |m: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * m[(i, j)] * m[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while sweeps < JACOBI_MAX_SWEEPS && off_norm(&m) > threshold {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

/// Eigenvalues only, sorted descending.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(symmetric_eigen(a)?.values)
}

/// Lower Cholesky factor of an SPD matrix.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::InvalidSize("cholesky needs a square matrix".into()));
    }
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::SingularSystem(format!(
                "matrix is not positive definite (pivot {j} = {d:e})"
            )));
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `A x = b` for SPD `A` via Cholesky.
pub fn cholesky_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let l = cholesky(a)?;
    let n = l.rows();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[(i, k)] * z[k]).sum();
        z[i] = (b[i] - s) / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| l[(k, i)] * x[k]).sum();
        x[i] = (z[i] - s) / l[(i, i)];
    }
    Ok(x)
}

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITERS: usize = 10_000;

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
///
/// Stops when the Rayleigh quotient changes by less than `POWER_TOL`
/// relative between iterations.
pub fn power_iteration_max(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    if n == 0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..n as u64)
        .map(|i| 0.5 + (splitmix64(0x9E37_79B9 ^ i) >> 11) as f64 / (1u64 << 53) as f64)
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = a.matvec(&v);
        let next = dot(&v, &w);
        let nw = norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|x| x / nw).collect();
        if (next - lambda).abs() <= POWER_TOL * next.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        lambda = next;
    }
    lambda
}
