//! Small dense kernels: factorizations, least squares and symmetric eigensolves.
//!
//! Matrices are row-major slices with explicit dimensions. Sizes here are
//! bounded by the coarsest level or by a handful of test vectors, so the
//! textbook O(n^3) algorithms are adequate.

use crate::error::{AmgError, Result};
use crate::scalar::Scalar;

/// In-place Cholesky `A = L L^T`; the lower triangle of `a` receives `L`,
/// the strict upper triangle is zeroed.
pub fn cholesky_in_place<T: Scalar>(a: &mut [T], n: usize) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(AmgError::Factorization(format!(
                "non-positive pivot {d:e} at column {j}"
            )));
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for k in j + 1..n {
            a[j * n + k] = T::zero();
        }
    }
    Ok(())
}

/// Solves `L L^T x = b` in place given the factor from [`cholesky_in_place`].
pub fn cholesky_solve<T: Scalar>(l: &[T], n: usize, b: &mut [T]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// LU with partial pivoting; returns the row permutation.
pub fn lu_in_place<T: Scalar>(a: &mut [T], n: usize) -> Result<Vec<usize>> {
    let mut piv: Vec<usize> = (0..n).collect();
    let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    for k in 0..n {
        let (mut p, mut best) = (k, a[k * n + k].abs());
        for i in k + 1..n {
            if a[i * n + k].abs() > best {
                best = a[i * n + k].abs();
                p = i;
            }
        }
        if best <= T::epsilon() * scale || !best.is_finite() {
            return Err(AmgError::Factorization(format!(
                "singular pivot at column {k}"
            )));
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            piv.swap(k, p);
        }
        let d = a[k * n + k];
        for i in k + 1..n {
            let f = a[i * n + k] / d;
            a[i * n + k] = f;
            if f != T::zero() {
                for j in k + 1..n {
                    let u = a[k * n + j];
                    a[i * n + j] -= f * u;
                }
            }
        }
    }
    Ok(piv)
}

pub fn lu_solve<T: Scalar>(lu: &[T], piv: &[usize], n: usize, b: &mut [T]) {
    let pb: Vec<T> = piv.iter().map(|&p| b[p]).collect();
    b.copy_from_slice(&pb);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= lu[i * n + k] * b[k];
        }
        b[i] = s;
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= lu[i * n + k] * b[k];
        }
        b[i] = s / lu[i * n + i];
    }
}

/// Factored dense operator used for exact solves on the coarsest level.
#[derive(Clone, Debug)]
pub enum DenseFactor<T> {
    Cholesky { l: Vec<T>, n: usize },
    Lu { lu: Vec<T>, piv: Vec<usize>, n: usize },
}

impl<T: Scalar> DenseFactor<T> {
    /// Cholesky when `symmetric`, otherwise LU. A failed factorization is
    /// retried once with the diagonal shifted by `1e-12 * trace / n`.
    pub fn factor(dense: &[T], n: usize, symmetric: bool) -> Result<Self> {
        let attempt = |a: &[T]| -> Result<Self> {
            let mut a = a.to_vec();
            if symmetric {
                cholesky_in_place(&mut a, n)?;
                Ok(DenseFactor::Cholesky { l: a, n })
            } else {
                let piv = lu_in_place(&mut a, n)?;
                Ok(DenseFactor::Lu { lu: a, piv, n })
            }
        };
        match attempt(dense) {
            Ok(f) => Ok(f),
            Err(_) if n > 0 => {
                let trace: T = (0..n).map(|i| dense[i * n + i]).sum();
                let shift = T::of(1e-12) * trace.abs() / T::of_usize(n);
                let mut shifted = dense.to_vec();
                for i in 0..n {
                    shifted[i * n + i] += shift;
                }
                attempt(&shifted)
            }
            Err(e) => Err(e),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DenseFactor::Cholesky { n, .. } | DenseFactor::Lu { n, .. } => *n,
        }
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        match self {
            DenseFactor::Cholesky { l, n } => cholesky_solve(l, *n, b),
            DenseFactor::Lu { lu, piv, n } => lu_solve(lu, piv, *n, b),
        }
    }

    /// Lower-triangular factor of the Cholesky variant.
    pub fn cholesky_factor(&self) -> Option<&[T]> {
        match self {
            DenseFactor::Cholesky { l, .. } => Some(l),
            DenseFactor::Lu { .. } => None,
        }
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// the columns of a row-major `n x n` array.
pub fn symmetric_eigen<T: Scalar>(a: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    let mut m = a.to_vec();
    // symmetrize defensively against roundoff in the caller's projection
    for i in 0..n {
        for j in i + 1..n {
            let s = (m[i * n + j] + m[j * n + i]) * T::of(0.5);
            m[i * n + j] = s;
            m[j * n + i] = s;
        }
    }
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut total = T::zero();
        for i in 0..n {
            for j in 0..n {
                let x = m[i * n + j] * m[i * n + j];
                total += x;
                if i != j {
                    off += x;
                }
            }
        }
        if off <= eps * eps * total || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (T::of(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[i * n + i]
            .partial_cmp(&m[j * n + j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals: Vec<T> = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vecs = vec![T::zero(); n * n];
    for (newc, &oldc) in order.iter().enumerate() {
        for r in 0..n {
            vecs[r * n + newc] = v[r * n + oldc];
        }
    }
    (vals, vecs)
}

/// Least squares `min ||A x - b||` for an `m x n` matrix with `m >= n` and
/// full column rank, by Householder QR. Returns `x` and the residual norm.
pub fn lstsq_qr<T: Scalar>(a: &[T], m: usize, n: usize, b: &[T]) -> Result<(Vec<T>, T)> {
    if m < n {
        return Err(AmgError::dims("lstsq_qr", format!("m >= {n}"), m));
    }
    let mut r = a.to_vec();
    let mut y = b.to_vec();
    let scale = a.iter().fold(T::zero(), |s, v| s.max(v.abs()));
    for k in 0..n {
        let mut norm = T::zero();
        for i in k..m {
            norm += r[i * n + k] * r[i * n + k];
        }
        let norm = norm.sqrt();
        if norm <= T::of(100.0) * T::epsilon() * scale {
            return Err(AmgError::Factorization(format!(
                "rank deficient least-squares matrix at column {k}"
            )));
        }
        let alpha = if r[k * n + k] > T::zero() { -norm } else { norm };
        // Householder vector stored in a scratch buffer
        let mut v: Vec<T> = (k..m).map(|i| r[i * n + k]).collect();
        v[0] -= alpha;
        let vnorm2: T = v.iter().map(|x| *x * *x).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        for j in k..n {
            let mut s = T::zero();
            for (t, i) in (k..m).enumerate() {
                s += v[t] * r[i * n + j];
            }
            let f = T::of(2.0) * s / vnorm2;
            for (t, i) in (k..m).enumerate() {
                r[i * n + j] -= f * v[t];
            }
        }
        let mut s = T::zero();
        for (t, i) in (k..m).enumerate() {
            s += v[t] * y[i];
        }
        let f = T::of(2.0) * s / vnorm2;
        for (t, i) in (k..m).enumerate() {
            y[i] -= f * v[t];
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in i + 1..n {
            s -= r[i * n + j] * x[j];
        }
        x[i] = s / r[i * n + i];
    }
    let res = y[n..].iter().map(|v| *v * *v).sum::<T>().sqrt();
    Ok((x, res))
}

/// Minimum-norm least-squares solution of `A x = b` (`m x n`, any shape,
/// any rank) through the pseudo-inverse of the smaller Gram matrix.
/// Singular values below `rel_cut * sigma_max` are treated as zero.
pub fn min_norm_lstsq<T: Scalar>(a: &[T], m: usize, n: usize, b: &[T], rel_cut: T) -> Vec<T> {
    if m == 0 || n == 0 {
        return vec![T::zero(); n];
    }
    if n <= m {
        // x = pinv(A^T A) A^T b
        let mut g = vec![T::zero(); n * n];
        let mut rhs = vec![T::zero(); n];
        for i in 0..m {
            for p in 0..n {
                rhs[p] += a[i * n + p] * b[i];
                for q in 0..n {
                    g[p * n + q] += a[i * n + p] * a[i * n + q];
                }
            }
        }
        pinv_apply(&g, n, &rhs, rel_cut * rel_cut)
    } else {
        // x = A^T pinv(A A^T) b
        let mut g = vec![T::zero(); m * m];
        for p in 0..m {
            for q in 0..m {
                let mut s = T::zero();
                for k in 0..n {
                    s += a[p * n + k] * a[q * n + k];
                }
                g[p * m + q] = s;
            }
        }
        let y = pinv_apply(&g, m, b, rel_cut * rel_cut);
        let mut x = vec![T::zero(); n];
        for p in 0..m {
            for k in 0..n {
                x[k] += a[p * n + k] * y[p];
            }
        }
        x
    }
}

fn pinv_apply<T: Scalar>(g: &[T], n: usize, b: &[T], rel_cut: T) -> Vec<T> {
    let (vals, vecs) = symmetric_eigen(g, n);
    let top = vals.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let mut x = vec![T::zero(); n];
    for k in 0..n {
        if vals[k] <= rel_cut * top || vals[k] <= T::zero() {
            continue;
        }
        let mut c = T::zero();
        for i in 0..n {
            c += vecs[i * n + k] * b[i];
        }
        c /= vals[k];
        for i in 0..n {
            x[i] += c * vecs[i * n + k];
        }
    }
    x
}

/// Row-major product `A (m x k) * B (k x n)`.
pub fn matmul<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); m * n];
    for i in 0..m {
        for l in 0..k {
            let x = a[i * k + l];
            if x == T::zero() {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += x * b[l * n + j];
            }
        }
    }
    c
}
