//! Sparse kernels: products, transposition and the Galerkin triple product.
//!
//! Every per-row reduction runs in ascending column order, so results are
//! bitwise identical whether rows are processed serially or in parallel.

use rayon::prelude::*;

use super::csr::{Idx, SparseMatrix};
use super::multivector::MultiVector;
use crate::error::{AmgError, Result};
use crate::scalar::Scalar;

/// Rows per parallel task; small matrices stay on the calling thread.
const PAR_CHUNK: usize = 4096;

impl<T: Scalar> SparseMatrix<T> {
    /// `y = A x` for a single vector.
    pub fn mul_vec(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols(), "mul_vec: x length");
        assert_eq!(y.len(), self.nrows(), "mul_vec: y length");
        let kernel = |i: usize, yi: &mut T| {
            let (c, v) = self.row(i);
            let mut s = T::zero();
            for (&j, &a) in c.iter().zip(v) {
                s += a * x[j as usize];
            }
            *yi = s;
        };
        if self.nrows() > PAR_CHUNK {
            y.par_chunks_mut(PAR_CHUNK)
                .enumerate()
                .for_each(|(b, chunk)| {
                    for (k, yi) in chunk.iter_mut().enumerate() {
                        kernel(b * PAR_CHUNK + k, yi);
                    }
                });
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                kernel(i, yi);
            }
        }
    }

    /// Allocating single-vector product.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows()];
        self.mul_vec(x, &mut y);
        y
    }

    /// `y = A^T x` without forming the transpose.
    pub fn mul_vec_transposed(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.nrows());
        assert_eq!(y.len(), self.ncols());
        y.iter_mut().for_each(|v| *v = T::zero());
        for (i, &xi) in x.iter().enumerate() {
            for (j, a) in self.row_iter(i) {
                y[j] += a * xi;
            }
        }
    }
}

/// Sparse matrix times a block of vectors.
pub fn spmv<T: Scalar>(a: &SparseMatrix<T>, x: &MultiVector<T>) -> Result<MultiVector<T>> {
    if a.ncols() != x.nrows() {
        return Err(AmgError::dims("spmv", a.ncols(), x.nrows()));
    }
    let m = x.ncols();
    let mut out = MultiVector::zeros(a.nrows(), m);
    let xv = x.values();
    for (i, yrow) in out.values_mut().chunks_mut(m.max(1)).enumerate().take(a.nrows()) {
        for (j, v) in a.row_iter(i) {
            let xr = &xv[j * m..(j + 1) * m];
            for (y, &xx) in yrow.iter_mut().zip(xr) {
                *y += v * xx;
            }
        }
    }
    Ok(out)
}

/// Exact transpose; the result keeps sorted rows.
pub fn transpose<T: Scalar>(a: &SparseMatrix<T>) -> SparseMatrix<T> {
    let (m, n) = (a.nrows(), a.ncols());
    let mut counts = vec![0usize; n + 1];
    for &c in a.col_indices() {
        counts[c as usize + 1] += 1;
    }
    for j in 0..n {
        counts[j + 1] += counts[j];
    }
    let mut next = counts.clone();
    let mut cols = vec![0 as Idx; a.nnz()];
    let mut vals = vec![T::zero(); a.nnz()];
    // rows visited in ascending order, so each output row is already sorted
    for i in 0..m {
        for (j, v) in a.row_iter(i) {
            let p = next[j];
            cols[p] = i as Idx;
            vals[p] = v;
            next[j] += 1;
        }
    }
    SparseMatrix::from_parts_unchecked(n, m, counts, cols, vals)
}

/// Sparse-sparse product `A B` (Gustavson, dense accumulator per row).
///
/// Entries that cancel to exactly zero are dropped.
pub fn spgemm<T: Scalar>(a: &SparseMatrix<T>, b: &SparseMatrix<T>) -> Result<SparseMatrix<T>> {
    if a.ncols() != b.nrows() {
        return Err(AmgError::dims("spgemm", a.ncols(), b.nrows()));
    }
    let n = b.ncols();
    let rows: Vec<(Vec<Idx>, Vec<T>)> = (0..a.nrows())
        .into_par_iter()
        .with_min_len(256)
        .map_init(
            || (vec![usize::MAX; n], Vec::<usize>::new(), Vec::<T>::new()),
            |(marker, touched, acc), i| {
                touched.clear();
                acc.clear();
                for (k, av) in a.row_iter(i) {
                    for (j, bv) in b.row_iter(k) {
                        let slot = marker[j];
                        if slot == usize::MAX {
                            marker[j] = acc.len();
                            touched.push(j);
                            acc.push(av * bv);
                        } else {
                            acc[slot] += av * bv;
                        }
                    }
                }
                let mut entries: Vec<(Idx, T)> = touched
                    .iter()
                    .map(|&j| {
                        let v = acc[marker[j]];
                        marker[j] = usize::MAX;
                        (j as Idx, v)
                    })
                    .filter(|e| e.1 != T::zero())
                    .collect();
                entries.sort_unstable_by_key(|e| e.0);
                entries.into_iter().unzip()
            },
        )
        .collect();
    let mut offsets = Vec::with_capacity(a.nrows() + 1);
    offsets.push(0);
    let total: usize = rows.iter().map(|r| r.0.len()).sum();
    let mut cols = Vec::with_capacity(total);
    let mut vals = Vec::with_capacity(total);
    for (c, v) in rows {
        cols.extend(c);
        vals.extend(v);
        offsets.push(cols.len());
    }
    Ok(SparseMatrix::from_parts_unchecked(
        a.nrows(),
        n,
        offsets,
        cols,
        vals,
    ))
}

/// Coarse operator `P^T A P`, symmetrized as `(R + R^T) / 2`.
pub fn galerkin_product<T: Scalar>(
    a: &SparseMatrix<T>,
    p: &SparseMatrix<T>,
) -> Result<SparseMatrix<T>> {
    let r = galerkin_product_unsymmetrized(a, p)?;
    let rt = transpose(&r);
    r.add_scaled(T::of(0.5), &rt, T::of(0.5))
}

/// `P^T A P` without the symmetrization step, for non-symmetric operators.
pub fn galerkin_product_unsymmetrized<T: Scalar>(
    a: &SparseMatrix<T>,
    p: &SparseMatrix<T>,
) -> Result<SparseMatrix<T>> {
    if !a.is_square() {
        return Err(AmgError::dims(
            "galerkin_product",
            "square A",
            format!("{}x{}", a.nrows(), a.ncols()),
        ));
    }
    if a.nrows() != p.nrows() {
        return Err(AmgError::dims("galerkin_product", a.nrows(), p.nrows()));
    }
    let ap = spgemm(a, p)?;
    spgemm(&transpose(p), &ap)
}
