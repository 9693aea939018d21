//! Small dense complex linear algebra: just enough for MIMO channel matrices
//! and their thin QR factorization.

use num_complex::Complex64;
use std::ops::{Index, IndexMut};

use crate::{Error, Result};

pub type ComplexVector = Vec<Complex64>;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
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

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: other.rows,
            });
        }
        Ok(Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).map(|k| self[(i, k)] * other[(k, j)]).sum()
        }))
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Result<ComplexVector> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry-wise magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Thin QR factors: `q` is `rows × cols` with orthonormal columns, `r` is
/// `cols × cols` upper triangular with real, strictly positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct QrFactors {
    pub q: ComplexMatrix,
    pub r: ComplexMatrix,
}

/// Thin QR decomposition by modified Gram–Schmidt.
///
/// Gram–Schmidt produces `r_jj = ‖v_j‖`, so the diagonal comes out real and
/// positive without a separate phase normalization. A second
/// orthogonalization pass keeps `q` orthonormal to machine precision for
/// moderately conditioned inputs.
pub fn qr_decompose(h: &ComplexMatrix) -> Result<QrFactors> {
    let (m, n) = (h.rows(), h.cols());
    if m < n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: m,
        });
    }
    let scale = h.frobenius_norm();
    let mut q = h.clone();
    let mut r = ComplexMatrix::zeros(n, n);

    for j in 0..n {
        for _pass in 0..2 {
            for i in 0..j {
                let mut proj = Complex64::new(0.0, 0.0);
                for row in 0..m {
                    proj += q[(row, i)].conj() * q[(row, j)];
                }
                for row in 0..m {
                    let qi = q[(row, i)];
                    q[(row, j)] -= proj * qi;
                }
                r[(i, j)] += proj;
            }
        }
        let norm = (0..m).map(|row| q[(row, j)].norm_sqr()).sum::<f64>().sqrt();
        if !(norm >= 1e-12 * scale) || norm == 0.0 {
            return Err(Error::DecompositionFailed { pivot: norm });
        }
        r[(j, j)] = Complex64::new(norm, 0.0);
        for row in 0..m {
            q[(row, j)] /= norm;
        }
    }
    Ok(QrFactors { q, r })
}

/// Computes `y' = Qᴴ y`.
pub fn rotate_received(q: &ComplexMatrix, y: &[Complex64]) -> Result<ComplexVector> {
    if y.len() != q.rows() {
        return Err(Error::DimensionMismatch {
            expected: q.rows(),
            actual: y.len(),
        });
    }
    Ok((0..q.cols())
        .map(|j| (0..q.rows()).map(|i| q[(i, j)].conj() * y[i]).sum())
        .collect())
}
