use std::collections::BTreeMap;

use super::{abar, assemble, InterpContext, InterpKind, NodeSets, Prolongation, RowWeights};
use crate::coarsen::SocGraph;
use crate::scalar::Scalar;
use crate::sparse::{CfPartition, SparseMatrix};

/// Extended+i interpolation over the distance-two set `Ĉ_i`.
pub fn extended_i_weights<T: Scalar>(
    a: &SparseMatrix<T>,
    g: &SocGraph<T>,
    cf: &CfPartition,
) -> Prolongation<T> {
    let ctx = InterpContext::new(a, g, cf);
    assemble(cf, InterpKind::ExtendedI, |i| {
        let sets = ctx.sets(i);
        let chat = ctx.extended_set(&sets);
        extended_row(&ctx, i, &sets, &chat, 0)
    })
}

/// Extended+i weights restricted to the greedy cover `Ĉ^h_i`.
pub fn hybrid_weights<T: Scalar>(
    a: &SparseMatrix<T>,
    g: &SocGraph<T>,
    cf: &CfPartition,
) -> Prolongation<T> {
    let ctx = InterpContext::new(a, g, cf);
    assemble(cf, InterpKind::Hybrid, |i| {
        let sets = ctx.sets(i);
        let (set, uncovered) = hybrid_cover(&ctx, &sets);
        extended_row(&ctx, i, &sets, &set, uncovered)
    })
}

/// `Ĉ^h_i` of node `i` and the number of strong fine neighbours that could
/// not be covered.
pub fn hybrid_set<T: Scalar>(ctx: &InterpContext<'_, T>, i: usize) -> (Vec<usize>, usize) {
    hybrid_cover(ctx, &ctx.sets(i))
}

fn hybrid_cover<T: Scalar>(ctx: &InterpContext<'_, T>, sets: &NodeSets) -> (Vec<usize>, usize) {
    let mut set = sets.c_strong.clone();
    // strong fine neighbours sharing no C-point with i, with their C_k^S
    let mut uncovered: Vec<(usize, Vec<usize>)> = sets
        .f_star
        .iter()
        .map(|&k| (k, ctx.coarse_strong(k)))
        .collect();
    while !uncovered.is_empty() {
        // degree of each distance-two candidate, counted against F' only
        let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
        for (_, ck) in &uncovered {
            for &c in ck {
                if set.binary_search(&c).is_err() {
                    *degree.entry(c).or_default() += 1;
                }
            }
        }
        // max degree, smallest id on ties (BTreeMap iterates ascending)
        let Some((best, _)) = degree
            .iter()
            .fold(None, |acc: Option<(usize, usize)>, (&c, &d)| match acc {
                Some((_, bd)) if bd >= d => acc,
                _ => Some((c, d)),
            })
        else {
            break;
        };
        let pos = set.binary_search(&best).unwrap_err();
        set.insert(pos, best);
        uncovered.retain(|(_, ck)| ck.binary_search(&best).is_err());
    }
    (set, uncovered.len())
}

/// `w_ij = -(a_ij + Σ_{k ∈ F^S} a_ik ā_kj / Σ_{l ∈ Ĉ ∪ {i}} ā_kl) / ã_ii`
/// for `j ∈ Ĉ`, with `ã_ii = a_ii + Σ_{N^W \ Ĉ} a_in + Σ_k a_ik ā_ki / (..)`.
fn extended_row<T: Scalar>(
    ctx: &InterpContext<'_, T>,
    i: usize,
    sets: &NodeSets,
    chat: &[usize],
    warnings: usize,
) -> RowWeights<T> {
    let a = ctx.a;
    let mut warnings = warnings;
    if chat.is_empty() {
        return RowWeights {
            entries: Vec::new(),
            warnings,
        };
    }
    let mut num: Vec<T> = chat.iter().map(|&j| a.get(i, j)).collect();
    let mut diag = a.get(i, i);
    for &n in &sets.weak {
        if chat.binary_search(&n).is_err() {
            diag += a.get(i, n);
        }
    }
    let mut contrib = vec![T::zero(); chat.len()];
    for &k in &sets.f_strong {
        let aik = a.get(i, k);
        let akk = a.get(k, k);
        let mut dk = T::zero();
        let mut aki = T::zero();
        contrib.iter_mut().for_each(|c| *c = T::zero());
        for (l, v) in a.row_iter(k) {
            if l == i {
                aki = abar(akk, v);
                dk += aki;
            } else if let Ok(p) = chat.binary_search(&l) {
                let b = abar(akk, v);
                contrib[p] = b;
                dk += b;
            }
        }
        if dk == T::zero() {
            diag += aik;
            warnings += 1;
            continue;
        }
        for (n, c) in num.iter_mut().zip(&contrib) {
            *n += aik * *c / dk;
        }
        diag += aik * aki / dk;
    }
    if diag == T::zero() {
        return RowWeights {
            entries: Vec::new(),
            warnings: warnings + 1,
        };
    }
    RowWeights {
        entries: chat.iter().copied().zip(num.into_iter().map(|v| -v / diag)).collect(),
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::super::classical_weights;
    use super::super::fixtures::*;
    use super::*;
    use crate::coarsen::pmis;

    #[test]
    fn extended_preserves_constants_on_interior_rows() {
        let nx = 12;
        let a = poisson2d(nx);
        let g = strong_graph(&a);
        let cf = pmis(&g, 5);
        let p = extended_i_weights(&a, &g, &cf);
        let ones = vec![1.0; cf.n_coarse()];
        let p1 = p.p.apply(&ones);
        let rs = a.row_sums();
        for i in 0..nx * nx {
            if rs[i].abs() < 1e-14 && !p.orphans.contains(&i) {
                assert!((p1[i] - 1.0).abs() < 1e-12, "row {i}: {}", p1[i]);
            }
        }
    }

    #[test]
    fn extended_reduces_to_direct_without_strong_fine() {
        let a = poisson1d(9);
        let g = strong_graph(&a);
        let cf = CfPartition::from_coarse_nodes(9, &[0, 2, 4, 6, 8]).unwrap();
        let c = classical_weights(&a, &g, &cf);
        let e = extended_i_weights(&a, &g, &cf);
        let h = hybrid_weights(&a, &g, &cf);
        assert_eq!(c.p, e.p);
        assert_eq!(c.p, h.p);
    }

    #[test]
    fn hybrid_between_classical_and_extended() {
        let a = poisson2d(16);
        let g = strong_graph(&a);
        let cf = pmis(&g, 1);
        let c = classical_weights(&a, &g, &cf).p.nnz();
        let h = hybrid_weights(&a, &g, &cf).p.nnz();
        let e = extended_i_weights(&a, &g, &cf).p.nnz();
        assert!(c <= h && h <= e, "{c} {h} {e}");
    }
}
