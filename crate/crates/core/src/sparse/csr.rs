use crate::error::{AmgError, Result};
use crate::scalar::Scalar;

/// Index type used for column indices inside a compressed row structure.
pub type Idx = u32;

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing inside every row and lie in
/// `[0, ncols)`; there are no duplicate entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<Idx>,
    values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    /// Builds a matrix from raw CSR arrays, validating every structural invariant.
    pub fn try_new(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<Idx>,
        values: Vec<T>,
    ) -> Result<Self> {
        if ncols > Idx::MAX as usize / 2 || nrows > Idx::MAX as usize / 2 {
            return Err(AmgError::InvalidStructure(format!(
                "dimension {nrows}x{ncols} exceeds the 2^31-1 limit"
            )));
        }
        if row_offsets.len() != nrows + 1 {
            return Err(AmgError::InvalidStructure(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                nrows + 1
            )));
        }
        if row_offsets[0] != 0 || *row_offsets.last().unwrap() != col_indices.len() {
            return Err(AmgError::InvalidStructure(
                "row_offsets must start at 0 and end at nnz".into(),
            ));
        }
        if col_indices.len() != values.len() {
            return Err(AmgError::InvalidStructure(
                "col_indices and values differ in length".into(),
            ));
        }
        for i in 0..nrows {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            if lo > hi {
                return Err(AmgError::InvalidStructure(format!(
                    "row_offsets decreases at row {i}"
                )));
            }
            let cols = &col_indices[lo..hi];
            for w in cols.windows(2) {
                if w[0] >= w[1] {
                    return Err(AmgError::InvalidStructure(format!(
                        "columns not strictly increasing in row {i}"
                    )));
                }
            }
            if let Some(&last) = cols.last() {
                if last as usize >= ncols {
                    return Err(AmgError::InvalidStructure(format!(
                        "column {last} out of range in row {i}"
                    )));
                }
            }
        }
        Ok(Self::from_parts_unchecked(
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        ))
    }

    pub(crate) fn from_parts_unchecked(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<Idx>,
        values: Vec<T>,
    ) -> Self {
        debug_assert_eq!(row_offsets.len(), nrows + 1);
        SparseMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Assembles from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, T)],
    ) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(AmgError::InvalidStructure(format!(
                    "triplet ({r},{c}) outside {nrows}x{ncols}"
                )));
            }
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0 as Idx; triplets.len()];
        let mut vals = vec![T::zero(); triplets.len()];
        for &(r, c, v) in triplets {
            let p = next[r];
            cols[p] = c as Idx;
            vals[p] = v;
            next[r] += 1;
        }
        let mut offsets = Vec::with_capacity(nrows + 1);
        offsets.push(0);
        let mut out_cols = Vec::with_capacity(triplets.len());
        let mut out_vals = Vec::with_capacity(triplets.len());
        let mut row: Vec<(Idx, T)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|p| (cols[p], vals[p])));
            // stable sort keeps the summation order of duplicates deterministic
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut s = row[k].1;
                k += 1;
                while k < row.len() && row[k].0 == c {
                    s += row[k].1;
                    k += 1;
                }
                out_cols.push(c);
                out_vals.push(s);
            }
            offsets.push(out_cols.len());
        }
        Self::try_new(nrows, ncols, offsets, out_cols, out_vals)
    }

    /// Builds a matrix from a row-major dense array, skipping exact zeros.
    pub fn from_dense(nrows: usize, ncols: usize, dense: &[T]) -> Result<Self> {
        if dense.len() != nrows * ncols {
            return Err(AmgError::dims("from_dense", nrows * ncols, dense.len()));
        }
        let mut offsets = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..nrows {
            for j in 0..ncols {
                let v = dense[i * ncols + j];
                if v != T::zero() {
                    cols.push(j as Idx);
                    vals.push(v);
                }
            }
            offsets.push(cols.len());
        }
        Self::try_new(nrows, ncols, offsets, cols, vals)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); n])
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_parts_unchecked(
            n,
            n,
            (0..=n).collect(),
            (0..n as Idx).collect(),
            diag.to_vec(),
        )
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_parts_unchecked(nrows, ncols, vec![0; nrows + 1], Vec::new(), Vec::new())
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[Idx] {
        &self.col_indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[Idx], &[T]) {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    #[inline]
    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_offsets[i + 1] - self.row_offsets[i]
    }

    /// Iterates `(col, value)` over row `i`.
    pub fn row_iter(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (c, v) = self.row(i);
        c.iter().zip(v).map(|(&c, &v)| (c as usize, v))
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (c, v) = self.row(i);
        match c.binary_search(&(j as Idx)) {
            Ok(p) => v[p],
            Err(_) => T::zero(),
        }
    }

    /// Diagonal entries (zero where absent).
    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.nrows * self.ncols];
        for i in 0..self.nrows {
            for (j, v) in self.row_iter(i) {
                d[i * self.ncols + j] = v;
            }
        }
        d
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, v| if v.abs() > m { v.abs() } else { m })
    }

    pub fn scale(&mut self, alpha: T) {
        for v in &mut self.values {
            *v *= alpha;
        }
    }

    /// Removes stored entries that are exactly zero.
    pub fn drop_exact_zeros(&self) -> Self {
        self.filter_entries(|_, _, v| v != T::zero())
    }

    /// Keeps entries for which `keep(row, col, value)` holds.
    pub fn filter_entries(&self, mut keep: impl FnMut(usize, usize, T) -> bool) -> Self {
        let mut offsets = Vec::with_capacity(self.nrows + 1);
        offsets.push(0);
        let mut cols = Vec::with_capacity(self.nnz());
        let mut vals = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row_iter(i) {
                if keep(i, j, v) {
                    cols.push(j as Idx);
                    vals.push(v);
                }
            }
            offsets.push(cols.len());
        }
        Self::from_parts_unchecked(self.nrows, self.ncols, offsets, cols, vals)
    }

    /// Largest relative asymmetry `max |a_ij - a_ji| / max |a|`; infinite for rectangular input.
    pub fn asymmetry(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let scale = self.max_abs();
        if scale == T::zero() {
            return T::zero();
        }
        let mut worst = T::zero();
        for i in 0..self.nrows {
            for (j, v) in self.row_iter(i) {
                let d = (v - self.get(j, i)).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst / scale
    }

    pub fn is_symmetric(&self, rel_tol: T) -> bool {
        self.asymmetry() <= rel_tol
    }

    /// Returns `alpha * self + beta * other` (same shape required).
    pub fn add_scaled(&self, alpha: T, other: &Self, beta: T) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(AmgError::dims(
                "add_scaled",
                format!("{}x{}", self.nrows, self.ncols),
                format!("{}x{}", other.nrows, other.ncols),
            ));
        }
        let mut offsets = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let take_a = q >= cb.len() || (p < ca.len() && ca[p] <= cb[q]);
                let take_b = p >= ca.len() || (q < cb.len() && cb[q] <= ca[p]);
                let (c, v) = if take_a && take_b {
                    let r = (ca[p], alpha * va[p] + beta * vb[q]);
                    p += 1;
                    q += 1;
                    r
                } else if take_a {
                    let r = (ca[p], alpha * va[p]);
                    p += 1;
                    r
                } else {
                    let r = (cb[q], beta * vb[q]);
                    q += 1;
                    r
                };
                if v != T::zero() {
                    cols.push(c);
                    vals.push(v);
                }
            }
            offsets.push(cols.len());
        }
        Ok(Self::from_parts_unchecked(
            self.nrows, self.ncols, offsets, cols, vals,
        ))
    }

    /// Lower triangle including the diagonal.
    pub fn lower_triangle(&self) -> Self {
        self.filter_entries(|i, j, _| j <= i)
    }

    /// Sum of every entry in each row.
    pub fn row_sums(&self) -> Vec<T> {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().copied().sum())
            .collect()
    }

    pub fn cast<U: Scalar>(&self) -> SparseMatrix<U> {
        SparseMatrix::from_parts_unchecked(
            self.nrows,
            self.ncols,
            self.row_offsets.clone(),
            self.col_indices.clone(),
            self.values.iter().map(|v| U::of(v.as_f64())).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn try_new_rejects_unsorted_columns() {
        let e = SparseMatrix::<f64>::try_new(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 2.0]);
        assert!(matches!(e, Err(AmgError::InvalidStructure(_))));
    }

    #[test]
    fn try_new_rejects_out_of_range_column() {
        let e = SparseMatrix::<f64>::try_new(1, 2, vec![0, 1], vec![2], vec![1.0]);
        assert!(e.is_err());
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.5), (1, 0, -1.0)])
            .unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 1), 3.5);
        assert_eq!(a.get(1, 1), 0.0);
    }

    #[test]
    fn add_scaled_merges_patterns() {
        let a = SparseMatrix::from_dense(2, 2, &[1.0, 0.0, 2.0, 3.0]).unwrap();
        let b = SparseMatrix::from_dense(2, 2, &[1.0, 4.0, 0.0, 3.0]).unwrap();
        let c = a.add_scaled(1.0, &b, -1.0).unwrap();
        assert_eq!(c.to_dense(), vec![0.0, -4.0, 2.0, 0.0]);
        // exact cancellations are not stored
        assert_eq!(c.nnz(), 2);
    }
}
