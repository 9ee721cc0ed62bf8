use crate::error::{AmgError, Result};
use crate::scalar::Scalar;

/// Dense `nrows x ncols` block of column vectors stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiVector<T> {
    nrows: usize,
    ncols: usize,
    values: Vec<T>,
}

impl<T: Scalar> MultiVector<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        MultiVector {
            nrows,
            ncols,
            values: vec![T::zero(); nrows * ncols],
        }
    }

    pub fn from_row_major(nrows: usize, ncols: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != nrows * ncols {
            return Err(AmgError::dims("MultiVector", nrows * ncols, values.len()));
        }
        Ok(MultiVector {
            nrows,
            ncols,
            values,
        })
    }

    /// Single-column block holding `v`.
    pub fn from_column(v: Vec<T>) -> Self {
        MultiVector {
            nrows: v.len(),
            ncols: 1,
            values: v,
        }
    }

    pub fn from_columns(columns: &[Vec<T>]) -> Result<Self> {
        let ncols = columns.len();
        let nrows = columns.first().map_or(0, Vec::len);
        let mut mv = Self::zeros(nrows, ncols);
        for (j, c) in columns.iter().enumerate() {
            if c.len() != nrows {
                return Err(AmgError::dims("MultiVector::from_columns", nrows, c.len()));
            }
            mv.set_column(j, c);
        }
        Ok(mv)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.ncols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.values[i * self.ncols + j] = v;
    }

    /// Row `i` as a slice of length `ncols`.
    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.nrows).map(|i| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<T>> {
        (0..self.ncols).map(|j| self.column(j)).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[T]) {
        for (i, &x) in v.iter().enumerate() {
            self.values[i * self.ncols + j] = x;
        }
    }

    /// Rows selected by `rows`, in order.
    pub fn select_rows(&self, rows: impl IntoIterator<Item = usize>) -> Self {
        let mut values = Vec::new();
        let mut n = 0;
        for r in rows {
            values.extend_from_slice(self.row(r));
            n += 1;
        }
        MultiVector {
            nrows: n,
            ncols: self.ncols,
            values,
        }
    }

    /// `self^T other` as a row-major `ncols x other.ncols` array.
    pub fn gram_with(&self, other: &Self) -> Vec<T> {
        let (m, k) = (self.ncols, other.ncols);
        let mut g = vec![T::zero(); m * k];
        for i in 0..self.nrows {
            let a = self.row(i);
            let b = other.row(i);
            for p in 0..m {
                for q in 0..k {
                    g[p * k + q] += a[p] * b[q];
                }
            }
        }
        g
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, v| if v.abs() > m { v.abs() } else { m })
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
