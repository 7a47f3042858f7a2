//! Dense row-major f64 matrices sized for desk-scale training runs.
//!
//! All arithmetic stays in f64; file formats may down-convert to f32 on
//! write. Loops are deliberately plain so scalar-loop test oracles can
//! reproduce results bit for bit (same accumulation order).

use crate::error::{Error, Result};

/// Row-norm threshold below which a row counts as zero.
pub const ZERO_NORM_THRESHOLD: f64 = 1e-30;

/// A dense matrix of `rows x cols` f64 values in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Build from raw row-major data. Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "matrix data length {} does not match {}x{}",
            data.len(),
            rows,
            cols
        );
        Self { rows, cols, data }
    }

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
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    /// Gather the given rows into a new matrix, in the order given.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// `self * other`. Panics on inner-dimension mismatch.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let src = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    /// `self * other^T`. Panics on column mismatch.
    pub fn matmul_bt(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, other.cols,
            "matmul_bt: {}x{} * ({}x{})^T",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                out.data[i * other.rows + j] = dot(self.row(i), other.row(j));
            }
        }
        out
    }

    /// `self^T * other`. Panics on row mismatch.
    pub fn matmul_at(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.rows, other.rows,
            "matmul_at: ({}x{})^T * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Matrix::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let a_row = self.row(r);
            let b_row = other.row(r);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(b_row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        assert_eq!(self.shape(), other.shape(), "add_assign shape");
        for (d, &s) in self.data.iter_mut().zip(&other.data) {
            *d += s;
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "sub shape");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// Column sums as a vector of length `cols`.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (o, &v) in out.iter_mut().zip(self.row(r)) {
                *o += v;
            }
        }
        out
    }

    /// Mean of all rows as a 1 x cols matrix. Panics on an empty matrix.
    pub fn mean_row(&self) -> Matrix {
        assert!(self.rows > 0, "mean_row of empty matrix");
        let mut out = self.col_sums();
        let inv = 1.0 / self.rows as f64;
        for v in &mut out {
            *v *= inv;
        }
        Matrix::from_vec(1, self.cols, out)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn validate_finite(&self, context: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFiniteLoss {
                stage: 0,
                step: 0,
                detail: context.to_string(),
            })
        }
    }

    /// Largest absolute entry difference between two same-shaped matrices.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Plain sequential dot product; the accumulation order here is the one the
/// scalar oracles reproduce.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        total += x * y;
    }
    total
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Scale every row to unit Euclidean norm.
///
/// Fails with [`Error::ZeroNormRow`] if a row norm falls below
/// [`ZERO_NORM_THRESHOLD`].
pub fn normalize_rows(m: &Matrix) -> Result<Matrix> {
    let mut out = m.clone();
    for r in 0..m.rows() {
        let n = norm(m.row(r));
        if !n.is_finite() {
            return Err(Error::NonFiniteEvaluation);
        }
        if n < ZERO_NORM_THRESHOLD {
            return Err(Error::ZeroNormRow(r));
        }
        let inv = 1.0 / n;
        for v in out.row_mut(r) {
            *v *= inv;
        }
    }
    Ok(out)
}

/// `M * M^T`; for unit rows this is the pairwise cosine-similarity matrix.
pub fn gram(m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.rows());
    for i in 0..m.rows() {
        for j in 0..m.rows() {
            out.set(i, j, dot(m.row(i), m.row(j)));
        }
    }
    out
}
