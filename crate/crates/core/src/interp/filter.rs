use rayon::prelude::*;

use crate::dense::min_norm_lstsq;
use crate::error::{AmgError, Result};
use crate::scalar::Scalar;
use crate::smoother::{Smoother, SmootherConfig};
use crate::sparse::{spgemm, Idx, MultiVector, SparseMatrix};

/// Jacobi-smoothed prolongation `(I - omega D^{-1} A) P`.
///
/// `omega` defaults to `0.9 / rho(D^{-1} A)`. Coarse rows are no longer
/// pure injections afterwards.
pub fn smooth_prolongation<T: Scalar>(
    a: &SparseMatrix<T>,
    p: &SparseMatrix<T>,
    omega: Option<T>,
) -> Result<SparseMatrix<T>> {
    if a.ncols() != p.nrows() || !a.is_square() {
        return Err(AmgError::dims("smooth_prolongation", a.ncols(), p.nrows()));
    }
    let diag = a.diagonal();
    if let Some(row) = diag.iter().position(|d| *d == T::zero()) {
        return Err(AmgError::ZeroDiagonal { row });
    }
    let omega = match omega {
        Some(w) => w,
        None => T::of(0.9) / Smoother::build(a, &SmootherConfig::jacobi())?.rho_estimate,
    };
    if omega == T::zero() {
        return Ok(p.clone());
    }
    let ap = spgemm(a, p)?;
    let scale: Vec<T> = diag.iter().map(|d| omega / *d).collect();
    let dap = spgemm(&SparseMatrix::from_diagonal(&scale), &ap)?;
    p.add_scaled(T::one(), &dap, -T::one())
}

/// Drops the smallest entries of each row of `M` and compensates their
/// action on the columns of `W`.
///
/// Per row, entries are kept in decreasing magnitude (the diagonal of a
/// square matrix first) until they reach `rho` of the row's absolute sum. A
/// correction supported on the kept pattern then restores the row's action
/// on `W` in the least-squares, minimum-norm sense.
pub fn filter_with_compensation<T: Scalar>(
    m: &SparseMatrix<T>,
    w: &MultiVector<T>,
    rho: f64,
) -> Result<SparseMatrix<T>> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(AmgError::InvalidParameter(format!(
            "filter fraction {rho} outside (0, 1]"
        )));
    }
    if w.nrows() != m.ncols() {
        return Err(AmgError::dims("filter_with_compensation", m.ncols(), w.nrows()));
    }
    if rho == 1.0 {
        return Ok(m.clone());
    }
    let nt = w.ncols();
    let square = m.is_square();
    let rho = T::of(rho);
    let rows: Vec<(Vec<Idx>, Vec<T>)> = (0..m.nrows())
        .into_par_iter()
        .map(|i| {
            let (c, v) = m.row(i);
            let total: T = v.iter().map(|x| x.abs()).sum();
            if total == T::zero() || nt == 0 {
                return (c.to_vec(), v.to_vec());
            }
            let mut order: Vec<usize> = (0..c.len()).collect();
            // diagonal first, then by magnitude, then by column
            order.sort_by(|&p, &q| {
                let dp = square && c[p] as usize == i;
                let dq = square && c[q] as usize == i;
                dq.cmp(&dp)
                    .then(
                        v[q].abs()
                            .partial_cmp(&v[p].abs())
                            .unwrap_or(std::cmp::Ordering::Equal),
                    )
                    .then(c[p].cmp(&c[q]))
            });
            let mut acc = T::zero();
            let mut keep = vec![false; c.len()];
            for &p in &order {
                if acc >= rho * total {
                    break;
                }
                keep[p] = true;
                acc += v[p].abs();
            }
            if keep.iter().all(|k| *k) {
                return (c.to_vec(), v.to_vec());
            }
            let kept: Vec<usize> = (0..c.len()).filter(|&p| keep[p]).collect();
            let mut b = vec![T::zero(); nt];
            for p in (0..c.len()).filter(|&p| !keep[p]) {
                for (t, bt) in b.iter_mut().enumerate() {
                    *bt += v[p] * w.get(c[p] as usize, t);
                }
            }
            let k = kept.len();
            let mut sys = vec![T::zero(); nt * k];
            for (q, &p) in kept.iter().enumerate() {
                for t in 0..nt {
                    sys[t * k + q] = w.get(c[p] as usize, t);
                }
            }
            let delta = min_norm_lstsq(&sys, nt, k, &b, T::of(1e-12));
            let cols = kept.iter().map(|&p| c[p]).collect();
            let vals = kept.iter().zip(delta).map(|(&p, d)| v[p] + d).collect();
            (cols, vals)
        })
        .collect();
    let mut offsets = Vec::with_capacity(m.nrows() + 1);
    offsets.push(0);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    for (c, v) in rows {
        for (j, x) in c.into_iter().zip(v) {
            if x != T::zero() {
                cols.push(j);
                vals.push(x);
            }
        }
        offsets.push(cols.len());
    }
    Ok(SparseMatrix::from_parts_unchecked(
        m.nrows(),
        m.ncols(),
        offsets,
        cols,
        vals,
    ))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use crate::testspace::random_block;

    #[test]
    fn zero_omega_is_noop() {
        let a = poisson1d(6);
        let p = SparseMatrix::from_dense(6, 2, &[1.0, 0.0, 0.5, 0.5, 0.0, 1.0, 0.0, 1.0, 0.5, 0.5, 1.0, 0.0])
            .unwrap();
        assert_eq!(smooth_prolongation(&a, &p, Some(0.0)).unwrap(), p);
    }

    #[test]
    fn diagonal_operator_annihilates() {
        let a = SparseMatrix::from_diagonal(&[2.0, 3.0, 5.0]);
        let p = SparseMatrix::from_dense(3, 1, &[1.0, 0.5, 1.0]).unwrap();
        assert_eq!(smooth_prolongation(&a, &p, Some(1.0)).unwrap().nnz(), 0);
    }

    #[test]
    fn full_fraction_keeps_matrix() {
        let a = poisson2d(4);
        let w = random_block(16, 2, 1);
        assert_eq!(filter_with_compensation(&a, &w, 1.0).unwrap(), a);
        assert!(filter_with_compensation(&a, &w, 0.0).is_err());
        assert!(filter_with_compensation(&a, &w, 1.5).is_err());
    }

    #[test]
    fn ones_conserves_row_sums() {
        let m = SparseMatrix::<f64>::from_dense(
            2,
            4,
            &[4.0, -0.1, -2.0, -0.3, 0.2, 3.0, -1.0, 0.05],
        )
        .unwrap();
        let w = MultiVector::from_column(vec![1.0; 4]);
        let f = filter_with_compensation(&m, &w, 0.7).unwrap();
        assert!(f.nnz() < m.nnz());
        for (x, y) in f.row_sums().iter().zip(m.row_sums()) {
            assert!((x - y).abs() < 1e-13);
        }
    }
}
