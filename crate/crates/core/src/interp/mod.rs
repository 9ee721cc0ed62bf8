//! Prolongation operators: classical, extended+i, hybrid and BAMG
//! interpolation, prolongation smoothing, and filtering with near-kernel
//! compensation.

mod bamg;
mod classical;
mod extended;
mod filter;

pub use bamg::{bamg_prolongation, maxvol_select, BamgConfig};
pub use classical::classical_weights;
pub use extended::{extended_i_weights, hybrid_set, hybrid_weights};
pub use filter::{filter_with_compensation, smooth_prolongation};

use rayon::prelude::*;

use crate::coarsen::SocGraph;
use crate::scalar::Scalar;
use crate::sparse::{CfPartition, Idx, SparseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterpKind {
    Classical,
    ExtendedI,
    Hybrid,
    Bamg,
}

/// Interpolation operator plus per-row diagnostics.
#[derive(Clone, Debug)]
pub struct Prolongation<T> {
    pub p: SparseMatrix<T>,
    pub kind: InterpKind,
    /// Fine rows left without any interpolatory point (zero rows of `P`).
    pub orphans: Vec<usize>,
    /// Redistribution terms folded into the diagonal, uncovered hybrid
    /// nodes and similar local fallbacks.
    pub warnings: usize,
    /// BAMG only: interpolation distance used per row (0 for coarse rows).
    pub distance: Vec<u8>,
    /// BAMG only: relative least-squares residual per row.
    pub residual: Vec<T>,
}

impl<T: Scalar> Prolongation<T> {
    pub(crate) fn new(
        p: SparseMatrix<T>,
        kind: InterpKind,
        orphans: Vec<usize>,
        warnings: usize,
    ) -> Self {
        Prolongation {
            p,
            kind,
            orphans,
            warnings,
            distance: Vec::new(),
            residual: Vec::new(),
        }
    }
}

/// Index sets of one node, as used by the interpolation formulas.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeSets {
    /// Direct neighbours `N_i` (nonzero off-diagonal entries).
    pub n: Vec<usize>,
    /// Strong neighbours `S_i`, plus the coarse points that depend
    /// strongly on `i` when `S_i` itself has none.
    pub s: Vec<usize>,
    pub f_strong: Vec<usize>,
    pub c_strong: Vec<usize>,
    /// `N_i \ (F_i^S ∪ C_i^S)`.
    pub weak: Vec<usize>,
    /// Strong fine neighbours sharing no strong coarse point with `i`.
    pub f_star: Vec<usize>,
}

/// Read-only view over `A`, the strength graph and the F/C split.
pub struct InterpContext<'a, T> {
    pub a: &'a SparseMatrix<T>,
    pub g: &'a SocGraph<T>,
    pub cf: &'a CfPartition,
}

impl<'a, T: Scalar> InterpContext<'a, T> {
    pub fn new(a: &'a SparseMatrix<T>, g: &'a SocGraph<T>, cf: &'a CfPartition) -> Self {
        InterpContext { a, g, cf }
    }

    /// `C_k^S`, ascending.
    pub fn coarse_strong(&self, k: usize) -> Vec<usize> {
        self.g.strong(k).filter(|&j| self.cf.is_coarse(j)).collect()
    }

    pub fn sets(&self, i: usize) -> NodeSets {
        let n: Vec<usize> = self
            .a
            .row_iter(i)
            .filter(|&(j, v)| j != i && v != T::zero())
            .map(|e| e.0)
            .collect();
        let mut s: Vec<usize> = self.g.strong(i).collect();
        if !s.iter().any(|&j| self.cf.is_coarse(j)) {
            // PMIS may make i fine because a coarse neighbour depends on it;
            // such coarse points are the only ones it can interpolate from
            s.extend(
                n.iter()
                    .copied()
                    .filter(|&j| self.cf.is_coarse(j) && self.g.is_strong(j, i)),
            );
            s.sort_unstable();
        }
        let (c_strong, f_strong): (Vec<usize>, Vec<usize>) =
            s.iter().partition(|&&j| self.cf.is_coarse(j));
        let weak = n
            .iter()
            .copied()
            .filter(|j| s.binary_search(j).is_err())
            .collect();
        let f_star = f_strong
            .iter()
            .copied()
            .filter(|&k| !self.g.strong(k).any(|m| c_strong.binary_search(&m).is_ok()))
            .collect();
        NodeSets {
            n,
            s,
            f_strong,
            c_strong,
            weak,
            f_star,
        }
    }

    /// `Ĉ_i = C_i^S ∪ ⋃_{k ∈ F_i^S} C_k^S`, ascending.
    pub fn extended_set(&self, sets: &NodeSets) -> Vec<usize> {
        let mut c = sets.c_strong.clone();
        for &k in &sets.f_strong {
            c.extend(self.coarse_strong(k));
        }
        c.sort_unstable();
        c.dedup();
        c
    }
}

/// `ā_kj`: the coupling with couplings of the same sign as `a_kk` removed.
#[inline]
pub(crate) fn abar<T: Scalar>(akk: T, akj: T) -> T {
    if akj == T::zero() || (akj > T::zero()) == (akk > T::zero()) {
        T::zero()
    } else {
        akj
    }
}

/// Outcome of one fine row.
pub(crate) struct RowWeights<T> {
    /// `(coarse node id, weight)`.
    pub entries: Vec<(usize, T)>,
    pub warnings: usize,
}

/// Builds `P` from per-fine-row weights; coarse rows are unit injections.
pub(crate) fn assemble<T: Scalar>(
    cf: &CfPartition,
    kind: InterpKind,
    row: impl Fn(usize) -> RowWeights<T> + Sync,
) -> Prolongation<T> {
    let n = cf.len();
    let rows: Vec<(Vec<(Idx, T)>, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            if let Some(c) = cf.coarse_index(i) {
                return (vec![(c as Idx, T::one())], 0);
            }
            let rw = row(i);
            let mut e: Vec<(Idx, T)> = rw
                .entries
                .into_iter()
                .filter(|e| e.1 != T::zero())
                .map(|(j, w)| (cf.coarse_index(j).expect("coarse column") as Idx, w))
                .collect();
            e.sort_unstable_by_key(|x| x.0);
            (e, rw.warnings)
        })
        .collect();
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut orphans = Vec::new();
    let mut warnings = 0;
    for (i, (e, w)) in rows.into_iter().enumerate() {
        if e.is_empty() {
            orphans.push(i);
        }
        warnings += w;
        for (c, v) in e {
            cols.push(c);
            vals.push(v);
        }
        offsets.push(cols.len());
    }
    let p = SparseMatrix::from_parts_unchecked(n, cf.n_coarse(), offsets, cols, vals);
    Prolongation::new(p, kind, orphans, warnings)
}

/// Dispatches to the matrix-based schemes (BAMG needs a test space and is
/// called directly).
pub fn build_prolongation<T: Scalar>(
    kind: InterpKind,
    a: &SparseMatrix<T>,
    g: &SocGraph<T>,
    cf: &CfPartition,
) -> Prolongation<T> {
    match kind {
        InterpKind::Classical => classical_weights(a, g, cf),
        InterpKind::ExtendedI => extended_i_weights(a, g, cf),
        InterpKind::Hybrid => hybrid_weights(a, g, cf),
        InterpKind::Bamg => panic!("BAMG interpolation needs a test space"),
    }
}
