//! Small dense square matrices.
//!
//! Everything here is sized for k ≤ a handful of species, so the algorithms
//! are the textbook ones: Gauss-Jordan inversion with partial pivoting and
//! cyclic Jacobi rotations for symmetric eigenvalues.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative pivot threshold for [`Matrix::inverse`].
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Row-major `k × k` matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            dim: 1,
            data: vec![value],
        }
    }

    /// Builds from rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidParams(format!(
                    "matrix row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn mul(&self, other: &Matrix) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        Self::from_fn(self.dim, |i, j| {
            (0..self.dim).map(|p| self[(i, p)] * other[(p, j)]).sum()
        })
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.dim, v.len(), "dimension mismatch");
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn sub(&self, other: &Matrix) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// `diag(left) · self · diag(right)`.
    pub fn scale_rows_cols(&self, left: &[f64], right: &[f64]) -> Self {
        Self::from_fn(self.dim, |i, j| left[i] * self[(i, j)] * right[j])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    /// Largest `|a_ij − a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn symmetrized(&self) -> Self {
        Self::from_fn(self.dim, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Gauss-Jordan elimination with partial pivoting.
    ///
    /// Fails with [`Error::Singular`] when a pivot falls below
    /// `PIVOT_TOLERANCE` times the largest row norm of the input.
    pub fn inverse(&self) -> Result<Matrix> {
        let n = self.dim;
        let scale = (0..n)
            .map(|i| (0..n).map(|j| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        if !self.is_finite() || scale == 0.0 {
            return Err(Error::Singular("matrix is zero or non-finite".into()));
        }
        let threshold = PIVOT_TOLERANCE * scale;

        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let (pivot_row, pivot_abs) =
                (col..n)
                    .map(|r| (r, a[(r, col)].abs()))
                    .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_abs < threshold {
                return Err(Error::Singular(format!(
                    "pivot {pivot_abs:.3e} in column {col} below {threshold:.3e}"
                )));
            }
            if pivot_row != col {
                a.swap_rows(pivot_row, col);
                inv.swap_rows(pivot_row, col);
            }
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[(r, col)];
                if factor == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[(r, j)] -= factor * a[(col, j)];
                    inv[(r, j)] -= factor * inv[(col, j)];
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.dim {
            self.data.swap(a * self.dim + j, b * self.dim + j);
        }
    }

    /// Eigenvalues of a symmetric matrix, ascending. The input is averaged
    /// with its transpose first.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        match n {
            0 => return Vec::new(),
            1 => return vec![self.data[0]],
            2 => {
                let (a, d) = (self[(0, 0)], self[(1, 1)]);
                let b = 0.5 * (self[(0, 1)] + self[(1, 0)]);
                let mean = 0.5 * (a + d);
                let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
                return vec![mean - radius, mean + radius];
            }
            _ => {}
        }
        let mut a = self.symmetrized();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off < 1e-30 * (1.0 + a.frobenius().powi(2)) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        eig.sort_by(f64::total_cmp);
        eig
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.dim))?;
        for row in self.rows() {
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_known_matrix() {
        let m = Matrix::from_rows(&[vec![4.0, 7.0], vec![2.0, 6.0]]).unwrap();
        let inv = m.inverse().unwrap();
        let expected = [0.6, -0.7, -0.2, 0.4];
        for (a, b) in inv.as_slice().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_needs_pivoting() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 3.0], vec![4.0, -3.0, 8.0]]).unwrap();
        let prod = m.mul(&m.inverse().unwrap());
        assert!(prod.sub(&Matrix::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(m.inverse(), Err(Error::Singular(_))));
        assert!(Matrix::zeros(2).inverse().is_err());
    }

    #[test]
    fn jacobi_matches_closed_form() {
        // Eigenvalues of the 3x3 second-difference matrix: 2 - sqrt(2), 2, 2 + sqrt(2).
        let m = Matrix::from_rows(&[vec![2.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 2.0]]).unwrap();
        let eig = m.symmetric_eigenvalues();
        let s2 = 2f64.sqrt();
        for (a, b) in eig.iter().zip([2.0 - s2, 2.0, 2.0 + s2]) {
            assert!((a - b).abs() < 1e-13, "{eig:?}");
        }
    }

    #[test]
    fn two_by_two_eigenvalues() {
        let m = Matrix::from_rows(&[vec![0.3, -0.4], vec![-0.4, 0.45]]).unwrap();
        let eig = m.symmetric_eigenvalues();
        assert!((eig.iter().sum::<f64>() - 0.75).abs() < 1e-15);
        assert!((eig[0] * eig[1] - (0.135 - 0.16)).abs() < 1e-15);
    }

    #[test]
    fn serde_as_nested_rows() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, "[[1.0,2.0],[3.0,4.0]]");
        let back: Matrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
