use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: alloc::vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim("Matrix::from_vec", rows * cols, data.len()));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from equally long rows. An empty slice gives a 0×0 matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dim("Matrix::from_rows", cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    /// Builds an `n × columns.len()` matrix from column vectors.
    pub fn from_columns<C: AsRef<[f64]>>(n: usize, columns: &[C]) -> Result<Self> {
        let cols = columns.len();
        let mut m = Matrix::zeros(n, cols);
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != n {
                return Err(Error::dim("Matrix::from_columns", n, c.len()));
            }
            for (i, &v) in c.iter().enumerate() {
                m.data[i * cols + j] = v;
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for i in 0..self.rows {
            let r = self.row(i);
            data.extend(idx.iter().map(|&j| r[j]));
        }
        Matrix { rows: self.rows, cols: idx.len(), data }
    }

    /// Appends columns on the right.
    pub fn hstack(&self, other: &Matrix) -> Result<Matrix> {
        if other.rows != self.rows {
            return Err(Error::dim("Matrix::hstack", self.rows, other.rows));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Matrix { rows: self.rows, cols, data })
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_and_rows_agree() {
        let m = Matrix::from_columns(2, &[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(m.row(0), &[1.0, 3.0]);
        assert_eq!(m.column(1), alloc::vec![3.0, 4.0]);
        let h = m.hstack(&m.select_columns(&[0])).unwrap();
        assert_eq!(h.row(1), &[2.0, 4.0, 2.0]);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let rows: [&[f64]; 2] = [&[1.0, 2.0], &[1.0]];
        assert!(Matrix::from_rows(&rows).is_err());
    }
}
