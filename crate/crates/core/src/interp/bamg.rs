use std::collections::HashSet;

use rayon::prelude::*;

use super::{InterpKind, Prolongation};
use crate::coarsen::SocGraph;
use crate::dense::{lstsq_qr, lu_in_place, lu_solve};
use crate::error::{AmgError, Result};
use crate::scalar::{norm2, Scalar};
use crate::sparse::{CfPartition, Idx, MultiVector, SparseMatrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BamgConfig {
    pub l_min: usize,
    pub l_max: usize,
    /// Residual bound; `None` picks 1e-10 for up to two test vectors, else 1e-8.
    pub eps: Option<f64>,
    pub mu: f64,
    pub max_swaps: usize,
    pub maxvol_tol: f64,
}

impl Default for BamgConfig {
    fn default() -> Self {
        BamgConfig {
            l_min: 1,
            l_max: 3,
            eps: None,
            mu: 10.0,
            max_swaps: 50,
            maxvol_tol: 1e-2,
        }
    }
}

impl BamgConfig {
    pub fn eps_for(&self, nt: usize) -> f64 {
        self.eps.unwrap_or(if nt <= 2 { 1e-10 } else { 1e-8 })
    }
}

/// Near-maximal-volume row subset of the `rows x nt` row-major matrix `phi`.
///
/// Starts from the rows picked by completely pivoted elimination, then swaps
/// in any row whose coefficient in the current basis exceeds `1 + tol`.
/// Fewer than `nt` rows are returned when `phi` is rank deficient.
pub fn maxvol_select<T: Scalar>(
    phi: &[T],
    rows: usize,
    nt: usize,
    max_swaps: usize,
    tol: f64,
) -> Vec<usize> {
    assert_eq!(phi.len(), rows * nt);
    if rows == 0 || nt == 0 {
        return Vec::new();
    }
    let scale = phi.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return Vec::new();
    }
    let mut r = phi.to_vec();
    let mut used_row = vec![false; rows];
    let mut used_col = vec![false; nt];
    let mut sel = Vec::with_capacity(nt);
    for _ in 0..nt.min(rows) {
        let mut best = (T::zero(), 0, 0);
        for i in (0..rows).filter(|&i| !used_row[i]) {
            for j in (0..nt).filter(|&j| !used_col[j]) {
                if r[i * nt + j].abs() > best.0 {
                    best = (r[i * nt + j].abs(), i, j);
                }
            }
        }
        if best.0 <= T::of(1e-12) * scale {
            break;
        }
        let (_, pi, pj) = best;
        used_row[pi] = true;
        used_col[pj] = true;
        sel.push(pi);
        let piv = r[pi * nt + pj];
        let prow: Vec<T> = r[pi * nt..(pi + 1) * nt].to_vec();
        for i in (0..rows).filter(|&i| !used_row[i]) {
            let f = r[i * nt + pj] / piv;
            if f != T::zero() {
                for j in 0..nt {
                    r[i * nt + j] -= f * prow[j];
                }
            }
        }
    }
    if sel.len() < nt || rows == nt {
        sel.sort_unstable();
        return sel;
    }

    let tol = T::one() + T::of(tol);
    for _ in 0..max_swaps {
        // B = Φ Φ_sel^{-1}: solve Φ_sel^T b_r = φ_r for every row
        let mut st = vec![T::zero(); nt * nt];
        for (p, &s) in sel.iter().enumerate() {
            for j in 0..nt {
                st[j * nt + p] = phi[s * nt + j];
            }
        }
        let Ok(piv) = lu_in_place(&mut st, nt) else {
            break;
        };
        let mut best = (T::zero(), 0, 0);
        for i in 0..rows {
            let mut b = phi[i * nt..(i + 1) * nt].to_vec();
            lu_solve(&st, &piv, nt, &mut b);
            for (p, v) in b.iter().enumerate() {
                if v.abs() > best.0 {
                    best = (v.abs(), i, p);
                }
            }
        }
        if best.0 <= tol {
            break;
        }
        sel[best.2] = best.1;
    }
    sel.sort_unstable();
    sel
}

/// Coarse nodes reachable from `i` in the kept graph, with their distance.
fn coarse_by_distance(
    adj: &[Vec<usize>],
    cf: &CfPartition,
    i: usize,
    l_max: usize,
) -> Vec<(usize, usize)> {
    let mut seen = HashSet::from([i]);
    let mut frontier = vec![i];
    let mut found = Vec::new();
    for d in 1..=l_max {
        let mut next = Vec::new();
        for &u in &frontier {
            for &w in &adj[u] {
                if seen.insert(w) {
                    next.push(w);
                }
            }
        }
        next.sort_unstable();
        for &w in &next {
            if cf.is_coarse(w) {
                found.push((w, d));
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    found
}

struct BamgRow<T> {
    entries: Vec<(usize, T)>,
    distance: u8,
    residual: T,
}

fn bamg_row<T: Scalar>(
    adj: &[Vec<usize>],
    cf: &CfPartition,
    v: &MultiVector<T>,
    i: usize,
    cfg: &BamgConfig,
    eps: T,
) -> BamgRow<T> {
    let nt = v.ncols();
    let target = v.row(i);
    let tnorm = norm2(target);
    let reach = coarse_by_distance(adj, cf, i, cfg.l_max);
    let mut last = BamgRow {
        entries: Vec::new(),
        distance: 0,
        residual: T::one(),
    };
    let mut l = cfg.l_min.max(1);
    while l <= cfg.l_max {
        let cand: Vec<usize> = reach.iter().filter(|e| e.1 <= l).map(|e| e.0).collect();
        if cand.is_empty() {
            l += 1;
            continue;
        }
        let mut phi = Vec::with_capacity(cand.len() * nt);
        for &c in &cand {
            phi.extend_from_slice(v.row(c));
        }
        let sel = maxvol_select(&phi, cand.len(), nt, cfg.max_swaps, cfg.maxvol_tol);
        let k = sel.len();
        if k == 0 {
            l += 1;
            continue;
        }
        // nt x k system: columns are the selected coarse rows of V
        let mut m = vec![T::zero(); nt * k];
        for (p, &s) in sel.iter().enumerate() {
            for t in 0..nt {
                m[t * k + p] = phi[s * nt + t];
            }
        }
        let Ok((w, res)) = lstsq_qr(&m, nt, k, target) else {
            l += 1;
            continue;
        };
        let r = if tnorm > T::zero() { res / tnorm } else { T::zero() };
        let wn = norm2(&w);
        last = BamgRow {
            entries: sel.iter().map(|&s| cand[s]).zip(w).collect(),
            distance: l as u8,
            residual: r,
        };
        if r <= eps && wn <= T::of(cfg.mu) {
            break;
        }
        l += 1;
    }
    last
}

/// Least-squares interpolation of the test space on adaptively grown
/// interpolatory sets.
///
/// Distances are measured on the kept strength graph `G`.
pub fn bamg_prolongation<T: Scalar>(
    g: &SocGraph<T>,
    cf: &CfPartition,
    v: &MultiVector<T>,
    cfg: &BamgConfig,
) -> Result<Prolongation<T>> {
    let n = cf.len();
    if v.nrows() != n || g.n() != n {
        return Err(AmgError::dims("bamg_prolongation", n, v.nrows()));
    }
    if v.ncols() == 0 {
        return Err(AmgError::EmptyBasis);
    }
    if cfg.l_min > cfg.l_max || cfg.l_max == 0 || cfg.l_max > u8::MAX as usize {
        return Err(AmgError::InvalidParameter(format!(
            "bamg distances {}..={} invalid",
            cfg.l_min, cfg.l_max
        )));
    }
    let eps = T::of(cfg.eps_for(v.ncols()));
    let adj = g.kept_adjacency();
    let rows: Vec<BamgRow<T>> = (0..n)
        .into_par_iter()
        .map(|i| match cf.coarse_index(i) {
            Some(_) => BamgRow {
                entries: vec![(i, T::one())],
                distance: 0,
                residual: T::zero(),
            },
            None => bamg_row(&adj, cf, v, i, cfg, eps),
        })
        .collect();

    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut orphans = Vec::new();
    let mut distance = Vec::with_capacity(n);
    let mut residual = Vec::with_capacity(n);
    let mut warnings = 0;
    for (i, row) in rows.into_iter().enumerate() {
        let mut e: Vec<(Idx, T)> = row
            .entries
            .into_iter()
            .filter(|x| x.1 != T::zero())
            .map(|(j, w)| (cf.coarse_index(j).expect("coarse") as Idx, w))
            .collect();
        e.sort_unstable_by_key(|x| x.0);
        if e.is_empty() {
            orphans.push(i);
            warnings += 1;
        }
        for (c, w) in e {
            cols.push(c);
            vals.push(w);
        }
        offsets.push(cols.len());
        distance.push(row.distance);
        residual.push(row.residual);
    }
    let p = SparseMatrix::from_parts_unchecked(n, cf.n_coarse(), offsets, cols, vals);
    let mut out = Prolongation::new(p, InterpKind::Bamg, orphans, warnings);
    out.distance = distance;
    out.residual = residual;
    Ok(out)
}
