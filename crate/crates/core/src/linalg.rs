//! Row-major dense matrices and LU factorization with partial pivoting.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape {
                expected: format!("{} entries", rows * cols),
                actual: format!("{} entries", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
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

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// `PA = LU`, stored compactly: unit-lower multipliers below the diagonal and
/// `U` on and above it.
#[derive(Debug, Clone)]
pub struct Lu {
    factors: Matrix,
    perm: Vec<usize>,
    min_pivot: f64,
}

impl Lu {
    /// Factorizes a square matrix. A pivot at or below
    /// `relative_tol · ‖A‖∞` is reported as singular.
    pub fn factor(mut a: Matrix, relative_tol: f64) -> Result<Self> {
        let n = a.rows();
        if n != a.cols() {
            return Err(Error::Shape {
                expected: "square matrix".into(),
                actual: format!("{}x{}", a.rows(), a.cols()),
            });
        }
        let threshold = relative_tol * a.norm_inf();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;

        for k in 0..n {
            let (pivot_row, pivot) = (k..n)
                .map(|r| (r, a[(r, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot > threshold) {
                return Err(Error::Singular {
                    column: k,
                    pivot,
                    threshold,
                    origin: None,
                });
            }
            min_pivot = min_pivot.min(pivot);
            if pivot_row != k {
                perm.swap(k, pivot_row);
                let (head, tail) = a.data.split_at_mut(pivot_row * n);
                head[k * n..(k + 1) * n].swap_with_slice(&mut tail[..n]);
            }

            let (upper, lower) = a.data.split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n..];
            let diag = pivot_row[k];
            for row in lower.chunks_exact_mut(n) {
                let factor = row[k] / diag;
                row[k] = factor;
                if factor != 0.0 {
                    for (dst, src) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                        *dst -= factor * src;
                    }
                }
            }
        }
        Ok(Self {
            factors: a,
            perm,
            min_pivot,
        })
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.factors.rows();
        assert_eq!(rhs.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for r in 1..n {
            let row = self.factors.row(r);
            let s: f64 = row[..r].iter().zip(&x[..r]).map(|(l, v)| l * v).sum();
            x[r] -= s;
        }
        for r in (0..n).rev() {
            let row = self.factors.row(r);
            let s: f64 = row[r + 1..].iter().zip(&x[r + 1..]).map(|(u, v)| u * v).sum();
            x[r] = (x[r] - s) / row[r];
        }
        x
    }
}
