//! Stationary smoothers `x <- x + omega M^{-1} (b - A x)`.
//!
//! Two approximate inverses are available: the diagonal (Jacobi) and an
//! adaptive factorized sparse approximate inverse `M^{-1} = G^T G` with `G`
//! lower triangular. The relaxation factor is `target / rho` where `rho`
//! estimates the spectral radius of `M^{-1} A`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dense::{cholesky_in_place, cholesky_solve};
use crate::error::{AmgError, Result};
use crate::scalar::{dot, norm2, Scalar};
use crate::sparse::{transpose, Idx, MultiVector, SparseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmootherKind {
    Jacobi,
    Fsai,
}

/// Adaptive pattern growth for the factorized approximate inverse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FsaiConfig {
    pub nsteps: usize,
    pub candidates_per_step: usize,
    /// Growth stops once `nnz(G) / nnz(tril(A))` exceeds this value.
    pub target_density: f64,
}

impl Default for FsaiConfig {
    fn default() -> Self {
        FsaiConfig {
            nsteps: 4,
            candidates_per_step: 2,
            target_density: 0.4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmootherConfig {
    pub kind: SmootherKind,
    pub fsai: FsaiConfig,
    /// `omega * rho`; defaults to 1.0 for FSAI and 0.9 for Jacobi.
    pub relax_target: Option<f64>,
    pub power_iters: usize,
    pub seed: u64,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        SmootherConfig {
            kind: SmootherKind::Jacobi,
            fsai: FsaiConfig::default(),
            relax_target: None,
            power_iters: 20,
            seed: 42,
        }
    }
}

impl SmootherConfig {
    pub fn jacobi() -> Self {
        Self::default()
    }

    pub fn fsai() -> Self {
        SmootherConfig {
            kind: SmootherKind::Fsai,
            ..Self::default()
        }
    }

    pub fn target(&self) -> f64 {
        self.relax_target.unwrap_or(match self.kind {
            SmootherKind::Jacobi => 0.9,
            SmootherKind::Fsai => 1.0,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Smoother<T> {
    pub kind: SmootherKind,
    /// `1 / a_ii` (Jacobi only; empty for FSAI).
    pub inv_diag: Vec<T>,
    /// Lower-triangular factor (FSAI only).
    pub g: Option<SparseMatrix<T>>,
    gt: Option<SparseMatrix<T>>,
    pub omega: T,
    pub rho_estimate: T,
    /// `nnz(G) / nnz(tril(A))` for FSAI.
    pub density: Option<f64>,
    /// FSAI rows that fell back to a diagonal entry after a failed local solve.
    pub fallback_rows: usize,
}

impl<T: Scalar> Smoother<T> {
    /// Builds the smoother of `cfg.kind` and sets its relaxation factor.
    pub fn build(a: &SparseMatrix<T>, cfg: &SmootherConfig) -> Result<Self> {
        let mut s = match cfg.kind {
            SmootherKind::Jacobi => jacobi_operator(a)?,
            SmootherKind::Fsai => fsai_operator(a, &cfg.fsai)?,
        };
        let omega = estimate_relaxation(a, &mut s, cfg.target(), cfg.power_iters, cfg.seed)?;
        s.omega = omega;
        Ok(s)
    }

    /// `z = M^{-1} r`.
    pub fn apply_inverse(&self, r: &[T], z: &mut [T]) {
        match self.kind {
            SmootherKind::Jacobi => {
                for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
                    *zi = *ri * *di;
                }
            }
            SmootherKind::Fsai => {
                let g = self.g.as_ref().expect("fsai factor");
                let gt = self.gt.as_ref().expect("fsai transpose");
                let t = g.apply(r);
                gt.mul_vec(&t, z);
            }
        }
    }

    /// Runs `steps` relaxation sweeps on `A x = b`, updating `x` in place.
    pub fn smooth(&self, a: &SparseMatrix<T>, b: &[T], x: &mut [T], steps: usize) {
        if steps == 0 {
            return;
        }
        let n = b.len();
        let mut r = vec![T::zero(); n];
        let mut z = vec![T::zero(); n];
        for _ in 0..steps {
            a.mul_vec(x, &mut r);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri = *bi - *ri;
            }
            self.apply_inverse(&r, &mut z);
            for (xi, zi) in x.iter_mut().zip(&z) {
                *xi += self.omega * *zi;
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            SmootherKind::Jacobi => self.inv_diag.len(),
            SmootherKind::Fsai => self.g.as_ref().map_or(0, |g| g.nrows()),
        }
    }

    /// Nonzeros of the stored approximate inverse.
    pub fn nnz(&self) -> usize {
        match self.kind {
            SmootherKind::Jacobi => self.inv_diag.len(),
            SmootherKind::Fsai => self.g.as_ref().map_or(0, |g| g.nnz()),
        }
    }
}

/// Jacobi smoother with its relaxation factor estimated from `A`.
pub fn build_jacobi<T: Scalar>(a: &SparseMatrix<T>) -> Result<Smoother<T>> {
    Smoother::build(a, &SmootherConfig::jacobi())
}

/// FSAI smoother with its relaxation factor estimated from `A`.
pub fn build_fsai<T: Scalar>(a: &SparseMatrix<T>, cfg: FsaiConfig) -> Result<Smoother<T>> {
    Smoother::build(
        a,
        &SmootherConfig {
            fsai: cfg,
            ..SmootherConfig::fsai()
        },
    )
}

fn checked_diagonal<T: Scalar>(a: &SparseMatrix<T>) -> Result<Vec<T>> {
    if !a.is_square() {
        return Err(AmgError::dims(
            "smoother",
            "square matrix",
            format!("{}x{}", a.nrows(), a.ncols()),
        ));
    }
    let d = a.diagonal();
    for (row, v) in d.iter().enumerate() {
        if *v == T::zero() || !v.is_finite() {
            return Err(AmgError::ZeroDiagonal { row });
        }
    }
    Ok(d)
}

fn jacobi_operator<T: Scalar>(a: &SparseMatrix<T>) -> Result<Smoother<T>> {
    let d = checked_diagonal(a)?;
    Ok(Smoother {
        kind: SmootherKind::Jacobi,
        inv_diag: d.iter().map(|v| T::one() / *v).collect(),
        g: None,
        gt: None,
        omega: T::one(),
        rho_estimate: T::one(),
        density: None,
        fallback_rows: 0,
    })
}

/// Dense principal submatrix `A[pat, pat]`.
fn principal_block<T: Scalar>(a: &SparseMatrix<T>, pat: &[usize]) -> Vec<T> {
    let m = pat.len();
    let mut blk = vec![T::zero(); m * m];
    for (p, &r) in pat.iter().enumerate() {
        for (q, &c) in pat.iter().enumerate() {
            blk[p * m + q] = a.get(r, c);
        }
    }
    blk
}

/// Solves `A[pat,pat] y = e_last`; `None` when the block is not positive definite.
fn local_row_solve<T: Scalar>(a: &SparseMatrix<T>, pat: &[usize]) -> Option<Vec<T>> {
    let m = pat.len();
    let mut blk = principal_block(a, pat);
    cholesky_in_place(&mut blk, m).ok()?;
    let mut y = vec![T::zero(); m];
    y[m - 1] = T::one();
    cholesky_solve(&blk, m, &mut y);
    if y[m - 1] > T::zero() && y.iter().all(|v| v.is_finite()) {
        Some(y)
    } else {
        None
    }
}

/// Columns `j < i`, not yet in `pat`, with the largest Kaporin gradient
/// `|(A g)_j|` where `g` is the current row scaled to unit diagonal.
fn gradient_candidates<T: Scalar>(
    a: &SparseMatrix<T>,
    i: usize,
    pat: &[usize],
    y: &[T],
    count: usize,
) -> Vec<usize> {
    let last = y[y.len() - 1];
    let mut grad: Vec<(usize, T)> = Vec::new();
    for (&k, &yk) in pat.iter().zip(y) {
        let gk = yk / last;
        // A symmetric: column k of A equals row k
        for (j, v) in a.row_iter(k) {
            if j < i && pat.binary_search(&j).is_err() {
                grad.push((j, v * gk));
            }
        }
    }
    grad.sort_unstable_by_key(|e| e.0);
    let mut merged: Vec<(usize, T)> = Vec::new();
    for (j, v) in grad {
        match merged.last_mut() {
            Some(last) if last.0 == j => last.1 += v,
            _ => merged.push((j, v)),
        }
    }
    let scale = a.get(i, i).abs();
    merged.retain(|e| e.1.abs() > T::of(1e-14) * scale);
    // largest magnitude first; ties go to the nearest column
    merged.sort_by(|x, y| {
        y.1.abs()
            .partial_cmp(&x.1.abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(y.0.cmp(&x.0))
    });
    merged.into_iter().take(count).map(|e| e.0).collect()
}

fn fsai_operator<T: Scalar>(a: &SparseMatrix<T>, cfg: &FsaiConfig) -> Result<Smoother<T>> {
    let d = checked_diagonal(a)?;
    if let Some(row) = d.iter().position(|v| *v <= T::zero()) {
        return Err(AmgError::NegativeDiagonal { row });
    }
    if cfg.target_density <= 0.0 {
        return Err(AmgError::InvalidParameter(
            "fsai target density must be positive".into(),
        ));
    }
    let n = a.nrows();
    let tril_nnz = a.lower_triangle().nnz().max(1);
    // patterns kept sorted ascending, so the diagonal is always last
    let mut patterns: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for _ in 0..cfg.nsteps {
        let density = patterns.iter().map(Vec::len).sum::<usize>() as f64 / tril_nnz as f64;
        if density > cfg.target_density {
            break;
        }
        let grown: Vec<Vec<usize>> = patterns
            .par_iter()
            .enumerate()
            .map(|(i, pat)| {
                let Some(y) = local_row_solve(a, pat) else {
                    return pat.clone();
                };
                let mut next = pat.clone();
                next.extend(gradient_candidates(a, i, pat, &y, cfg.candidates_per_step));
                next.sort_unstable();
                next
            })
            .collect();
        let changed = grown.iter().zip(&patterns).any(|(g, p)| g.len() != p.len());
        patterns = grown;
        if !changed {
            break;
        }
    }

    let rows: Vec<(Vec<usize>, Vec<T>, bool)> = patterns
        .into_par_iter()
        .enumerate()
        .map(|(i, pat)| match local_row_solve(a, &pat) {
            Some(y) => {
                let s = y[y.len() - 1].sqrt();
                (pat, y.into_iter().map(|v| v / s).collect(), false)
            }
            None => (vec![i], vec![T::one() / a.get(i, i).sqrt()], true),
        })
        .collect();

    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut fallback = 0;
    for (pat, g, fell_back) in rows {
        fallback += usize::from(fell_back);
        for (c, v) in pat.into_iter().zip(g) {
            if v != T::zero() || c == offsets.len() - 1 {
                cols.push(c as Idx);
                vals.push(v);
            }
        }
        offsets.push(cols.len());
    }
    let g = SparseMatrix::from_parts_unchecked(n, n, offsets, cols, vals);
    let density = g.nnz() as f64 / tril_nnz as f64;
    let gt = transpose(&g);
    Ok(Smoother {
        kind: SmootherKind::Fsai,
        inv_diag: Vec::new(),
        g: Some(g),
        gt: Some(gt),
        omega: T::one(),
        rho_estimate: T::one(),
        density: Some(density),
        fallback_rows: fallback,
    })
}

/// Power-method estimate of `rho(M^{-1} A)`.
///
/// Uses the Rayleigh quotient in the `A` inner product,
/// `(Av)^T M^{-1} (Av) / v^T A v`, falling back to a norm ratio when the
/// denominator is not positive. A vanishing iterate restarts from a new
/// seed, at most three times.
pub fn estimate_spectral_radius<T: Scalar>(
    a: &SparseMatrix<T>,
    s: &Smoother<T>,
    iters: usize,
    seed: u64,
) -> Result<T> {
    let n = a.nrows();
    if n == 0 {
        return Ok(T::one());
    }
    let iters = iters.max(1);
    'retry: for attempt in 0..4u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let mut v: Vec<T> = (0..n).map(|_| T::of(rng.gen_range(-1.0..1.0))).collect();
        let nv = norm2(&v);
        if nv == T::zero() {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let mut w = vec![T::zero(); n];
        let mut z = vec![T::zero(); n];
        let mut rho = T::zero();
        for _ in 0..iters {
            a.mul_vec(&v, &mut w);
            s.apply_inverse(&w, &mut z);
            let den = dot(&v, &w);
            let nz = norm2(&z);
            if nz == T::zero() || !nz.is_finite() {
                continue 'retry;
            }
            rho = if den > T::zero() {
                dot(&w, &z) / den
            } else {
                nz / norm2(&v)
            };
            for (vi, zi) in v.iter_mut().zip(&z) {
                *vi = *zi / nz;
            }
        }
        if rho > T::zero() && rho.is_finite() {
            return Ok(rho);
        }
    }
    Err(AmgError::Breakdown(
        "power iteration collapsed to the zero vector".into(),
    ))
}

/// Sets `S.rho_estimate` and returns `omega = target / rho`.
pub fn estimate_relaxation<T: Scalar>(
    a: &SparseMatrix<T>,
    s: &mut Smoother<T>,
    target: f64,
    power_iters: usize,
    seed: u64,
) -> Result<T> {
    if !(target > 0.0 && target < 2.0) {
        return Err(AmgError::InvalidParameter(format!(
            "relaxation target {target} must lie in (0, 2)"
        )));
    }
    let rho = estimate_spectral_radius(a, s, power_iters, seed)?;
    s.rho_estimate = rho;
    Ok(T::of(target) / rho)
}

/// Applies `steps` sweeps to each column of `b` starting from `x0`.
pub fn apply_smoother<T: Scalar>(
    s: &Smoother<T>,
    a: &SparseMatrix<T>,
    b: &MultiVector<T>,
    x0: &MultiVector<T>,
    steps: usize,
) -> Result<MultiVector<T>> {
    if a.nrows() != b.nrows() || b.nrows() != x0.nrows() || b.ncols() != x0.ncols() {
        return Err(AmgError::dims(
            "apply_smoother",
            format!("{}x{}", a.nrows(), b.ncols()),
            format!("{}x{}", x0.nrows(), x0.ncols()),
        ));
    }
    if s.dim() != a.nrows() {
        return Err(AmgError::dims("apply_smoother", a.nrows(), s.dim()));
    }
    let mut out = x0.clone();
    for j in 0..b.ncols() {
        let mut x = x0.column(j);
        s.smooth(a, &b.column(j), &mut x, steps);
        out.set_column(j, &x);
    }
    Ok(out)
}
