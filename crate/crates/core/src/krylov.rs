//! Preconditioned conjugate gradient and right-preconditioned BiCGstab.
//!
//! Both stop when `‖b - A x‖ <= rtol ‖b‖`. The recurred residual is replaced
//! by the true one every [`TRUE_RESIDUAL_EVERY`] iterations and convergence
//! is only declared after the true residual confirms it.

use std::fmt::Write as _;

use crate::error::{AmgError, Result};
use crate::hierarchy::{AmgConfig, AmgHierarchy};
use crate::scalar::{dot, norm2, Scalar};
use crate::sparse::SparseMatrix;

pub const TRUE_RESIDUAL_EVERY: usize = 50;

/// Slack on the confirmed true residual; absorbs the last bit of drift.
pub const CONFIRM_SLACK: f64 = 1.01;

/// Linear map `y = op(x)`.
pub trait Operator<T> {
    fn apply_to(&self, x: &[T], y: &mut [T]) -> Result<()>;
}

impl<T: Scalar> Operator<T> for SparseMatrix<T> {
    fn apply_to(&self, x: &[T], y: &mut [T]) -> Result<()> {
        if x.len() != self.ncols() || y.len() != self.nrows() {
            return Err(AmgError::dims("operator", self.ncols(), x.len()));
        }
        self.mul_vec(x, y);
        Ok(())
    }
}

impl<T: Scalar> Operator<T> for AmgHierarchy<T> {
    fn apply_to(&self, x: &[T], y: &mut [T]) -> Result<()> {
        self.apply(x, y)
    }
}

/// The identity, i.e. no preconditioning.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl<T: Scalar> Operator<T> for Identity {
    fn apply_to(&self, x: &[T], y: &mut [T]) -> Result<()> {
        y.copy_from_slice(x);
        Ok(())
    }
}

/// Wraps a closure as an [`Operator`].
pub struct FnOperator<F>(pub F);

impl<T, F: Fn(&[T], &mut [T])> Operator<T> for FnOperator<F> {
    fn apply_to(&self, x: &[T], y: &mut [T]) -> Result<()> {
        (self.0)(x, y);
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KrylovMethod {
    Pcg,
    BiCgStab,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrylovConfig {
    pub method: KrylovMethod,
    pub rtol: f64,
    pub max_iters: usize,
    pub record_history: bool,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        KrylovConfig {
            method: KrylovMethod::Pcg,
            rtol: 1e-8,
            max_iters: 5000,
            record_history: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KrylovResult<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// `‖b - A x‖ / ‖b‖` of the returned iterate.
    pub rel_residual: f64,
    /// Relative residual per iteration, starting with the initial guess.
    pub history: Vec<f64>,
}

/// PCG is only valid while the coarse operators stay symmetric.
pub fn select_method(requested: Option<KrylovMethod>, amg: &AmgConfig) -> Result<KrylovMethod> {
    let filtered = amg.filter.breaks_symmetry();
    match requested {
        Some(KrylovMethod::Pcg) if filtered => Err(AmgError::Config(
            "PCG cannot be combined with operator filtering: the filtered coarse matrices are \
             no more guaranteed to be SPD; use bicgstab"
                .into(),
        )),
        Some(m) => Ok(m),
        None if filtered => Ok(KrylovMethod::BiCgStab),
        None => Ok(KrylovMethod::Pcg),
    }
}

pub fn solve<T: Scalar>(
    a: &dyn Operator<T>,
    m: &dyn Operator<T>,
    b: &[T],
    x0: Option<&[T]>,
    cfg: &KrylovConfig,
) -> Result<KrylovResult<T>> {
    match cfg.method {
        KrylovMethod::Pcg => pcg(a, m, b, x0, cfg),
        KrylovMethod::BiCgStab => bicgstab(a, m, b, x0, cfg),
    }
}

fn check_cfg(cfg: &KrylovConfig) -> Result<()> {
    if !(cfg.rtol > 0.0) {
        return Err(AmgError::InvalidParameter(format!("rtol {} must be positive", cfg.rtol)));
    }
    Ok(())
}

fn residual<T: Scalar>(a: &dyn Operator<T>, b: &[T], x: &[T], r: &mut [T]) -> Result<()> {
    a.apply_to(x, r)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = *bi - *ri;
    }
    Ok(())
}

struct Start<T> {
    x: Vec<T>,
    r: Vec<T>,
    bnorm: T,
}

fn start<T: Scalar>(a: &dyn Operator<T>, b: &[T], x0: Option<&[T]>) -> Result<Start<T>> {
    let x = match x0 {
        Some(x0) if x0.len() != b.len() => return Err(AmgError::dims("initial guess", b.len(), x0.len())),
        Some(x0) => x0.to_vec(),
        None => vec![T::zero(); b.len()],
    };
    let mut r = vec![T::zero(); b.len()];
    residual(a, b, &x, &mut r)?;
    Ok(Start {
        x,
        r,
        bnorm: norm2(b),
    })
}

fn trivial<T: Scalar>(n: usize) -> KrylovResult<T> {
    KrylovResult {
        x: vec![T::zero(); n],
        iterations: 0,
        converged: true,
        rel_residual: 0.0,
        history: Vec::new(),
    }
}

/// Preconditioned conjugate gradient.
pub fn pcg<T: Scalar>(
    a: &dyn Operator<T>,
    m: &dyn Operator<T>,
    b: &[T],
    x0: Option<&[T]>,
    cfg: &KrylovConfig,
) -> Result<KrylovResult<T>> {
    check_cfg(cfg)?;
    let n = b.len();
    let Start { mut x, mut r, bnorm } = start(a, b, x0)?;
    if bnorm == T::zero() {
        return Ok(trivial(n));
    }
    let tol = T::of(cfg.rtol) * bnorm;
    let confirm = T::of(CONFIRM_SLACK) * tol;
    let mut history = Vec::new();
    let mut rn = norm2(&r);
    if cfg.record_history {
        history.push((rn / bnorm).as_f64());
    }
    let mut z = vec![T::zero(); n];
    let mut q = vec![T::zero(); n];
    let mut converged = false;
    let mut it = 0;
    if rn <= tol {
        converged = true;
    } else {
        m.apply_to(&r, &mut z)?;
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while it < cfg.max_iters {
            it += 1;
            a.apply_to(&p, &mut q)?;
            let pq = dot(&p, &q);
            if !pq.is_finite() {
                return Err(AmgError::Breakdown(format!("non-finite curvature at iteration {it}")));
            }
            if pq <= T::zero() {
                return Err(AmgError::NotSpd(format!(
                    "p^T A p = {:e} at iteration {it}",
                    pq.as_f64()
                )));
            }
            let alpha = rz / pq;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            if it % TRUE_RESIDUAL_EVERY == 0 {
                residual(a, b, &x, &mut r)?;
            }
            rn = norm2(&r);
            if cfg.record_history {
                history.push((rn / bnorm).as_f64());
            }
            if rn <= tol {
                residual(a, b, &x, &mut r)?;
                rn = norm2(&r);
                if rn <= confirm {
                    converged = true;
                    break;
                }
            }
            m.apply_to(&r, &mut z)?;
            let rz_new = dot(&r, &z);
            if rz_new <= T::zero() || !rz_new.is_finite() {
                if rz_new == T::zero() {
                    return Err(AmgError::Breakdown(format!("r^T M r = 0 at iteration {it}")));
                }
                return Err(AmgError::NotSpd(format!(
                    "preconditioner gives r^T M r = {:e} at iteration {it}",
                    rz_new.as_f64()
                )));
            }
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
    residual(a, b, &x, &mut r)?;
    Ok(KrylovResult {
        rel_residual: (norm2(&r) / bnorm).as_f64(),
        x,
        iterations: it,
        converged,
        history,
    })
}

/// Right-preconditioned BiCGstab. A vanishing `r̂^T r` restarts the
/// recurrence once with the current residual as new shadow vector.
pub fn bicgstab<T: Scalar>(
    a: &dyn Operator<T>,
    m: &dyn Operator<T>,
    b: &[T],
    x0: Option<&[T]>,
    cfg: &KrylovConfig,
) -> Result<KrylovResult<T>> {
    check_cfg(cfg)?;
    let n = b.len();
    let Start { mut x, mut r, bnorm } = start(a, b, x0)?;
    if bnorm == T::zero() {
        return Ok(trivial(n));
    }
    let tol = T::of(cfg.rtol) * bnorm;
    let confirm = T::of(CONFIRM_SLACK) * tol;
    let mut history = Vec::new();
    let mut rn = norm2(&r);
    if cfg.record_history {
        history.push((rn / bnorm).as_f64());
    }
    let mut shadow = r.clone();
    let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
    let mut p = vec![T::zero(); n];
    let mut v = vec![T::zero(); n];
    let mut ph = vec![T::zero(); n];
    let mut sh = vec![T::zero(); n];
    let mut s = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    let mut restarted = false;
    let mut converged = rn <= tol;
    let mut it = 0;
    let eps = T::epsilon();

    while !converged && it < cfg.max_iters {
        let rho_new = dot(&shadow, &r);
        if rho_new.abs() <= eps * norm2(&shadow) * rn || !rho_new.is_finite() {
            if restarted {
                return Err(AmgError::Breakdown(format!(
                    "shadow residual orthogonal to residual at iteration {it} after restart"
                )));
            }
            restarted = true;
            shadow.copy_from_slice(&r);
            rho = T::one();
            alpha = T::one();
            omega = T::one();
            p.iter_mut().for_each(|e| *e = T::zero());
            v.iter_mut().for_each(|e| *e = T::zero());
            continue;
        }
        it += 1;
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        m.apply_to(&p, &mut ph)?;
        a.apply_to(&ph, &mut v)?;
        let sv = dot(&shadow, &v);
        if sv == T::zero() || !sv.is_finite() {
            return Err(AmgError::Breakdown(format!("r̂^T A p = 0 at iteration {it}")));
        }
        alpha = rho / sv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        let sn = norm2(&s);
        if sn <= tol {
            for i in 0..n {
                x[i] += alpha * ph[i];
            }
            residual(a, b, &x, &mut r)?;
            rn = norm2(&r);
            if cfg.record_history {
                history.push((rn / bnorm).as_f64());
            }
            converged = rn <= confirm;
            continue;
        }
        m.apply_to(&s, &mut sh)?;
        a.apply_to(&sh, &mut t)?;
        let tt = dot(&t, &t);
        if tt == T::zero() {
            return Err(AmgError::Breakdown(format!("A M s = 0 at iteration {it}")));
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        }
        if it % TRUE_RESIDUAL_EVERY == 0 {
            residual(a, b, &x, &mut r)?;
        }
        rn = norm2(&r);
        if cfg.record_history {
            history.push((rn / bnorm).as_f64());
        }
        if rn <= tol {
            residual(a, b, &x, &mut r)?;
            rn = norm2(&r);
            converged = rn <= confirm;
        }
        if omega == T::zero() && !converged {
            return Err(AmgError::Breakdown(format!("omega = 0 at iteration {it}")));
        }
    }
    residual(a, b, &x, &mut r)?;
    Ok(KrylovResult {
        rel_residual: (norm2(&r) / bnorm).as_f64(),
        x,
        iterations: it,
        converged,
        history,
    })
}

/// `iteration,relative_residual` lines for a residual history.
pub fn history_csv(history: &[f64]) -> String {
    let mut s = String::from("iteration,relative_residual\n");
    for (k, r) in history.iter().enumerate() {
        let _ = writeln!(s, "{k},{r:e}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{FilterConfig, FilterTarget};

    fn cfg(method: KrylovMethod) -> KrylovConfig {
        KrylovConfig {
            method,
            record_history: true,
            ..KrylovConfig::default()
        }
    }

    #[test]
    fn identity_converges_at_once() {
        let a = SparseMatrix::<f64>::identity(5);
        let b = [1.0, -2.0, 3.0, 0.5, 0.0];
        for m in [KrylovMethod::Pcg, KrylovMethod::BiCgStab] {
            let r = solve(&a, &Identity, &b, None, &cfg(m)).unwrap();
            assert!(r.converged);
            assert_eq!(r.iterations, 1);
            assert_eq!(r.x, b.to_vec());
        }
    }

    #[test]
    fn exact_preconditioner() {
        let d = [2.0, 5.0, 0.5, 4.0];
        let a = SparseMatrix::<f64>::from_diagonal(&d);
        let inv = SparseMatrix::from_diagonal(&d.map(|v| 1.0 / v));
        let r = pcg(&a, &inv, &[1.0; 4], None, &cfg(KrylovMethod::Pcg)).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
    }

    #[test]
    fn nonsymmetric_two_by_two() {
        let a = SparseMatrix::<f64>::from_dense(2, 2, &[2.0, 1.0, 0.0, 3.0]).unwrap();
        let r = bicgstab(&a, &Identity, &[3.0, 3.0], None, &cfg(KrylovMethod::BiCgStab)).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-10 && (r.x[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = SparseMatrix::<f64>::from_diagonal(&[1.0, -1.0]);
        let e = pcg(&a, &Identity, &[0.0, 1.0], None, &cfg(KrylovMethod::Pcg)).unwrap_err();
        assert!(matches!(e, AmgError::NotSpd(_)));
    }

    #[test]
    fn zero_rhs() {
        let a = SparseMatrix::<f64>::identity(3);
        let r = pcg(&a, &Identity, &[0.0; 3], None, &cfg(KrylovMethod::Pcg)).unwrap();
        assert!(r.converged && r.iterations == 0 && r.x == vec![0.0; 3]);
    }

    #[test]
    fn routing_rejects_pcg_with_operator_filter() {
        let mut amg = AmgConfig::default();
        assert_eq!(select_method(None, &amg).unwrap(), KrylovMethod::Pcg);
        amg.filter = FilterConfig {
            rho: 0.9,
            target: FilterTarget::Operator,
        };
        assert_eq!(select_method(None, &amg).unwrap(), KrylovMethod::BiCgStab);
        let e = select_method(Some(KrylovMethod::Pcg), &amg).unwrap_err();
        assert!(e.to_string().contains("no more guaranteed to be SPD"));
        amg.filter.target = FilterTarget::Prolongation;
        assert_eq!(select_method(Some(KrylovMethod::Pcg), &amg).unwrap(), KrylovMethod::Pcg);
    }

    #[test]
    fn history_csv_layout() {
        assert_eq!(history_csv(&[1.0, 0.25]), "iteration,relative_residual\n0,1e0\n1,2.5e-1\n");
    }
}
