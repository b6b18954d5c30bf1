//! Small dense linear algebra: just enough for embeddings, least squares and
//! the half-space projections.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// `self · v`, each entry summed left to right.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| math::dot(self.row(i), v)).collect()
    }

    /// `selfᵀ · v`.
    pub fn tmul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    /// `selfᵀ · self`.
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.cols, self.cols);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..self.cols {
                for b in 0..self.cols {
                    g[(a, b)] += r[a] * r[b];
                }
            }
        }
        g
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves the square system `a · x = b` by Gaussian elimination with
/// partial pivoting. `None` when `a` is numerically singular.
pub fn solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    assert_eq!(b.len(), n);
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let scale = m.data.iter().fold(0.0f64, |acc, v| acc.max(math::abs(*v)));
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| math::abs(m[(i, col)]).total_cmp(&math::abs(m[(j, col)]))).unwrap();
        if math::abs(m[(pivot, col)]) <= 1e-13 * scale {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.data.swap(pivot * n + k, col * n + k);
            }
            rhs.swap(pivot, col);
        }
        for i in col + 1..n {
            let factor = m[(i, col)] / m[(col, col)];
            if factor != 0.0 {
                for k in col..n {
                    let v = m[(col, k)];
                    m[(i, k)] -= factor * v;
                }
                rhs[i] -= factor * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let tail: f64 = (i + 1..n).map(|k| m[(i, k)] * x[k]).sum();
        x[i] = (rhs[i] - tail) / m[(i, i)];
    }
    Some(x)
}

/// Least-squares solution of `a · x ≈ y` through the normal equations.
pub fn least_squares(a: &Matrix, y: &[f64]) -> Option<Vec<f64>> {
    solve(&a.gram(), &a.tmul_vec(y))
}

/// Orthonormalizes the columns of `a` (modified Gram–Schmidt). `None` when
/// the columns are linearly dependent.
pub fn orthonormal_columns(a: &Matrix) -> Option<Matrix> {
    let mut cols: Vec<Vec<f64>> = (0..a.cols()).map(|j| a.column(j)).collect();
    for j in 0..cols.len() {
        for i in 0..j {
            let proj = math::dot(&cols[i], &cols[j]);
            let qi = cols[i].clone();
            for (c, q) in cols[j].iter_mut().zip(&qi) {
                *c -= proj * q;
            }
        }
        let n = math::norm(&cols[j]);
        if n <= 1e-10 {
            return None;
        }
        cols[j].iter_mut().for_each(|c| *c /= n);
    }
    let mut out = Matrix::zeros(a.rows(), a.cols());
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            out[(i, j)] = *v;
        }
    }
    Some(out)
}
