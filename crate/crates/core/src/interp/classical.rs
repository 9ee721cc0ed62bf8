use super::{abar, assemble, InterpContext, InterpKind, Prolongation, RowWeights};
use crate::coarsen::SocGraph;
use crate::scalar::Scalar;
use crate::sparse::{CfPartition, SparseMatrix};

/// Distance-one classical interpolation with the `F_i^{S*}` correction.
///
/// `w_ij = -(a_ij + Σ_{k ∈ F^S \ F*} a_ik ā_kj / Σ_{m ∈ C^S} ā_km)
///          / (a_ii + Σ_{k ∈ N^W ∪ F*} a_ik)`, `j ∈ C_i^S`.
pub fn classical_weights<T: Scalar>(
    a: &SparseMatrix<T>,
    g: &SocGraph<T>,
    cf: &CfPartition,
) -> Prolongation<T> {
    let ctx = InterpContext::new(a, g, cf);
    assemble(cf, InterpKind::Classical, |i| classical_row(&ctx, i))
}

fn classical_row<T: Scalar>(ctx: &InterpContext<'_, T>, i: usize) -> RowWeights<T> {
    let a = ctx.a;
    let sets = ctx.sets(i);
    let cs = &sets.c_strong;
    if cs.is_empty() {
        return RowWeights {
            entries: Vec::new(),
            warnings: 0,
        };
    }
    let mut num: Vec<T> = cs.iter().map(|&j| a.get(i, j)).collect();
    let mut denom = a.get(i, i);
    for &k in &sets.weak {
        denom += a.get(i, k);
    }
    let mut warnings = 0;
    for &k in &sets.f_strong {
        let aik = a.get(i, k);
        if sets.f_star.binary_search(&k).is_ok() {
            denom += aik;
            continue;
        }
        let akk = a.get(k, k);
        let mut dk = T::zero();
        let mut contrib = vec![T::zero(); cs.len()];
        for (m, v) in a.row_iter(k) {
            if let Ok(p) = cs.binary_search(&m) {
                let b = abar(akk, v);
                dk += b;
                contrib[p] = b;
            }
        }
        if dk == T::zero() {
            // couplings to C_i^S all have the diagonal's sign: treat k as weak
            denom += aik;
            warnings += 1;
            continue;
        }
        for (n, c) in num.iter_mut().zip(contrib) {
            *n += aik * c / dk;
        }
    }
    if denom == T::zero() {
        return RowWeights {
            entries: Vec::new(),
            warnings: warnings + 1,
        };
    }
    RowWeights {
        entries: cs.iter().copied().zip(num.into_iter().map(|v| -v / denom)).collect(),
        warnings,
    }
}
