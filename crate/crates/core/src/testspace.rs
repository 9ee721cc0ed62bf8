//! Near-kernel test spaces: analytic kernels and SRQM refinement.
//!
//! SRQM here is a blocked, preconditioned Rayleigh quotient minimization with
//! Rayleigh-Ritz projection onto `span[V, M^{-1} R, P]`, where `P` is the
//! previous search direction (the LOBPCG form of the iteration). Since `V`
//! always lies in the projection space, every Ritz value is non-increasing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::symmetric_eigen;
use crate::error::{AmgError, Result};
use crate::scalar::{dot, norm2, Scalar};
use crate::smoother::Smoother;
use crate::sparse::{spmv, MultiVector, SparseMatrix};

/// Columns whose norm falls below this fraction of their initial norm are
/// treated as linearly dependent.
pub const DROP_TOL: f64 = 1e-13;

/// Stricter tolerance for the SRQM search basis: directions that are almost
/// inside the current span only add roundoff to the Ritz problem.
const SEARCH_DROP_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NearKernel {
    Constant,
    RigidBody3D,
}

#[derive(Clone, Debug)]
pub struct TestSpace<T> {
    /// Orthonormal columns.
    pub v: MultiVector<T>,
    /// Rayleigh quotients, ascending. Empty for analytic spaces that were
    /// never measured against an operator.
    pub rayleigh: Vec<T>,
    /// Ritz values after each SRQM iteration (the first entry is the start).
    pub history: Vec<Vec<T>>,
    /// Set when the Ritz basis lost rank and could not be repaired.
    pub rank_deficient: bool,
}

impl<T: Scalar> TestSpace<T> {
    pub fn n_vectors(&self) -> usize {
        self.v.ncols()
    }

    pub fn from_vectors(v: MultiVector<T>) -> Result<Self> {
        Ok(TestSpace {
            v: orthonormalize(&v)?,
            rayleigh: Vec::new(),
            history: Vec::new(),
            rank_deficient: false,
        })
    }

    /// Rayleigh quotients `v_j^T A v_j`, sorted ascending.
    pub fn measure(&mut self, a: &SparseMatrix<T>) -> Result<()> {
        let av = spmv(a, &self.v)?;
        let mut q: Vec<T> = (0..self.v.ncols())
            .map(|j| dot(&self.v.column(j), &av.column(j)))
            .collect();
        q.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        self.rayleigh = q;
        Ok(())
    }
}

/// Modified Gram-Schmidt on columns in place, with one reorthogonalization
/// pass. Returns the indices of the columns that survived.
fn mgs_columns<T: Scalar>(cols: &mut Vec<Vec<T>>, keep_first: usize, tol: f64) -> Vec<usize> {
    let tol = T::of(tol);
    let mut out: Vec<Vec<T>> = Vec::with_capacity(cols.len());
    let mut kept = Vec::new();
    for (idx, mut c) in std::mem::take(cols).into_iter().enumerate() {
        let initial = norm2(&c);
        if initial == T::zero() || !initial.is_finite() {
            continue;
        }
        for _ in 0..2 {
            for q in &out {
                let h = dot(q, &c);
                for (ci, qi) in c.iter_mut().zip(q) {
                    *ci -= h * *qi;
                }
            }
        }
        let nrm = norm2(&c);
        // the leading block is already orthonormal; keep it unless it collapsed
        let limit = if idx < keep_first { T::of(DROP_TOL) } else { tol };
        if nrm <= limit * initial {
            continue;
        }
        c.iter_mut().for_each(|x| *x /= nrm);
        out.push(c);
        kept.push(idx);
    }
    *cols = out;
    kept
}

/// Orthonormal basis of the span of `V`'s columns.
///
/// Dependent columns (norm below `1e-13` of their initial norm after
/// projection) are dropped.
pub fn orthonormalize<T: Scalar>(v: &MultiVector<T>) -> Result<MultiVector<T>> {
    let mut cols = v.columns();
    mgs_columns(&mut cols, 0, DROP_TOL);
    if cols.is_empty() {
        return Err(AmgError::EmptyBasis);
    }
    MultiVector::from_columns(&cols)
}

/// Constant vector or the six rigid-body modes of a 3D elastic body.
///
/// `coords` holds one `(x, y, z)` row per node; unknowns are ordered
/// node-wise. Dependent rotations (collinear nodes) are dropped.
pub fn analytic_near_kernel<T: Scalar>(
    kind: NearKernel,
    n: usize,
    coords: Option<&MultiVector<T>>,
) -> Result<TestSpace<T>> {
    let v = match kind {
        NearKernel::Constant => {
            if n == 0 {
                return Err(AmgError::EmptyBasis);
            }
            MultiVector::from_column(vec![T::one(); n])
        }
        NearKernel::RigidBody3D => {
            let xyz = coords.ok_or_else(|| {
                AmgError::InvalidParameter("rigid-body modes need node coordinates".into())
            })?;
            rigid_body_modes(n, xyz)?
        }
    };
    TestSpace::from_vectors(v)
}

fn rigid_body_modes<T: Scalar>(n: usize, xyz: &MultiVector<T>) -> Result<MultiVector<T>> {
    if xyz.ncols() != 3 {
        return Err(AmgError::dims("rigid-body coordinates", 3, xyz.ncols()));
    }
    if n % 3 != 0 || xyz.nrows() * 3 != n {
        return Err(AmgError::dims(
            "rigid-body coordinates",
            format!("{} nodes", n / 3),
            format!("{} rows for {n} unknowns", xyz.nrows()),
        ));
    }
    let nodes = xyz.nrows();
    if nodes == 0 {
        return Err(AmgError::EmptyBasis);
    }
    let mut centre = [T::zero(); 3];
    for i in 0..nodes {
        for (d, c) in centre.iter_mut().enumerate() {
            *c += xyz.get(i, d);
        }
    }
    centre.iter_mut().for_each(|c| *c /= T::of_usize(nodes));
    let mut v = MultiVector::zeros(n, 6);
    for i in 0..nodes {
        let x = xyz.get(i, 0) - centre[0];
        let y = xyz.get(i, 1) - centre[1];
        let z = xyz.get(i, 2) - centre[2];
        let (u, w, s) = (3 * i, 3 * i + 1, 3 * i + 2);
        v.set(u, 0, T::one());
        v.set(w, 1, T::one());
        v.set(s, 2, T::one());
        // rotation about z
        v.set(u, 3, -y);
        v.set(w, 3, x);
        // rotation about x
        v.set(w, 4, -z);
        v.set(s, 4, y);
        // rotation about y
        v.set(u, 5, z);
        v.set(s, 5, -x);
    }
    Ok(v)
}

/// Seeded random start block with `nt` columns, uniform in `[-1, 1)`.
pub fn random_block<T: Scalar>(n: usize, nt: usize, seed: u64) -> MultiVector<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals = (0..n * nt).map(|_| T::of(rng.gen_range(-1.0..1.0))).collect();
    MultiVector::from_row_major(n, nt, vals).expect("shape")
}

fn apply_columns<T: Scalar>(a: &SparseMatrix<T>, cols: &[Vec<T>]) -> Vec<Vec<T>> {
    cols.iter().map(|c| a.apply(c)).collect()
}

/// Rayleigh-Ritz on an orthonormal basis `b` with images `ab = A b`.
/// Returns all Ritz values (ascending) and coefficient vectors (as columns).
fn rayleigh_ritz<T: Scalar>(b: &[Vec<T>], ab: &[Vec<T>]) -> (Vec<T>, Vec<T>) {
    let k = b.len();
    let mut h = vec![T::zero(); k * k];
    for i in 0..k {
        for j in i..k {
            let s = (dot(&b[i], &ab[j]) + dot(&b[j], &ab[i])) * T::of(0.5);
            h[i * k + j] = s;
            h[j * k + i] = s;
        }
    }
    symmetric_eigen(&h, k)
}

fn combine<T: Scalar>(basis: &[Vec<T>], coef: &[T], k: usize, col: usize, from: usize) -> Vec<T> {
    let n = basis[0].len();
    let mut out = vec![T::zero(); n];
    for (r, bvec) in basis.iter().enumerate().skip(from) {
        let c = coef[r * k + col];
        if c != T::zero() {
            for (o, x) in out.iter_mut().zip(bvec) {
                *o += c * *x;
            }
        }
    }
    out
}

/// Refines `V0` towards the smallest eigenvectors of `A`, preconditioning
/// residuals with the smoother's approximate inverse.
pub fn srqm<T: Scalar>(
    a: &SparseMatrix<T>,
    s: &Smoother<T>,
    v0: &MultiVector<T>,
    iters: usize,
) -> Result<TestSpace<T>> {
    if v0.nrows() != a.nrows() {
        return Err(AmgError::dims("srqm", a.nrows(), v0.nrows()));
    }
    if s.dim() != a.nrows() {
        return Err(AmgError::dims("srqm smoother", a.nrows(), s.dim()));
    }
    let mut x = v0.columns();
    mgs_columns(&mut x, 0, DROP_TOL);
    if x.is_empty() {
        return Err(AmgError::EmptyBasis);
    }
    let m = x.len();
    let mut rank_deficient = m < v0.ncols();

    // initial Ritz pairs inside span(V0)
    let ax = apply_columns(a, &x);
    let (vals, coef) = rayleigh_ritz(&x, &ax);
    let mut lambda: Vec<T> = vals[..m].to_vec();
    let mut xs: Vec<Vec<T>> = (0..m).map(|j| combine(&x, &coef, m, j, 0)).collect();
    let mut axs: Vec<Vec<T>> = (0..m).map(|j| combine(&ax, &coef, m, j, 0)).collect();
    let mut dirs: Vec<Vec<T>> = Vec::new();
    let mut history = vec![lambda.clone()];
    let n = a.nrows();

    for _ in 0..iters {
        let mut basis: Vec<Vec<T>> = xs.clone();
        let mut z = vec![T::zero(); n];
        for j in 0..m {
            let r: Vec<T> = axs[j]
                .iter()
                .zip(&xs[j])
                .map(|(p, q)| *p - lambda[j] * *q)
                .collect();
            s.apply_inverse(&r, &mut z);
            basis.push(z.clone());
        }
        basis.extend(dirs.iter().cloned());
        let kept = mgs_columns(&mut basis, m, SEARCH_DROP_TOL);
        if kept.iter().take_while(|&&c| c < m).count() < m {
            // the current block itself lost rank
            rank_deficient = true;
            break;
        }
        if basis.len() == m {
            // nothing new to search: converged to roundoff
            history.push(lambda.clone());
            continue;
        }
        let k = basis.len();
        let ab = apply_columns(a, &basis);
        let (vals, coef) = rayleigh_ritz(&basis, &ab);
        let new_x: Vec<Vec<T>> = (0..m).map(|j| combine(&basis, &coef, k, j, 0)).collect();
        let new_ax: Vec<Vec<T>> = (0..m).map(|j| combine(&ab, &coef, k, j, 0)).collect();
        dirs = (0..m).map(|j| combine(&basis, &coef, k, j, m)).collect();
        xs = new_x;
        axs = new_ax;
        lambda = vals[..m].to_vec();
        history.push(lambda.clone());
    }

    Ok(TestSpace {
        v: MultiVector::from_columns(&xs)?,
        rayleigh: lambda,
        history,
        rank_deficient,
    })
}
