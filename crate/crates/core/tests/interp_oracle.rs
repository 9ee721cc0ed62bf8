mod common;

use amg_core::coarsen::pmis;
use amg_core::interp::{
    extended_i_weights, filter_with_compensation, hybrid_set, maxvol_select, InterpContext,
};
use amg_core::sparse::galerkin_product;
use amg_core::MultiVector;
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn distance_two_extended_and_hybrid_sets() {
    use common::names::*;
    let (a, cf) = common::distance_two_fixture();
    let g = common::strong_graph(&a);
    let ctx = InterpContext::new(&a, &g, &cf);
    let sets = ctx.sets(I);
    assert_eq!(sets.c_strong, vec![O]);
    assert_eq!(sets.f_strong, vec![P, K, J, R]);
    assert_eq!(sets.f_star, vec![K, J]);
    assert_eq!(ctx.extended_set(&sets), vec![O, M, N, L]);
    let (h, uncovered) = hybrid_set(&ctx, I);
    assert_eq!(h, vec![O, N]);
    assert_eq!(uncovered, 0);
}

fn min_cover(sets: &[Vec<usize>]) -> usize {
    let mut cand: Vec<usize> = sets.iter().flatten().copied().collect();
    cand.sort_unstable();
    cand.dedup();
    assert!(cand.len() <= 20);
    (0u32..1 << cand.len())
        .filter(|mask| {
            sets.iter()
                .all(|s| s.iter().any(|c| mask & (1 << cand.binary_search(c).unwrap()) != 0))
        })
        .map(|m| m.count_ones() as usize)
        .min()
        .unwrap()
}

#[test]
fn hybrid_cover_against_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for case in 0..40 {
        let n = rng.gen_range(20..=200);
        let a = common::random_mmatrix(&mut rng, n, 5.0);
        let g = common::strong_graph(&a);
        let cf = pmis(&g, case);
        let ctx = InterpContext::new(&a, &g, &cf);
        for i in (0..n).filter(|&i| !cf.is_coarse(i)) {
            let sets = ctx.sets(i);
            let chat = ctx.extended_set(&sets);
            let (h, uncovered) = hybrid_set(&ctx, i);
            assert!(sets.c_strong.iter().all(|c| h.contains(c)));
            assert!(h.iter().all(|c| chat.contains(c)), "case {case} node {i}");
            let need: Vec<Vec<usize>> = sets
                .f_star
                .iter()
                .map(|&k| ctx.coarse_strong(k))
                .filter(|ck| !ck.is_empty())
                .collect();
            assert_eq!(uncovered, sets.f_star.len() - need.len());
            for ck in &need {
                assert!(ck.iter().any(|c| h.contains(c)), "case {case} node {i}");
            }
            if need.is_empty() {
                assert_eq!(h, sets.c_strong);
                continue;
            }
            let added = h.len() - sets.c_strong.len();
            let best = min_cover(&need);
            let dmax = need.len();
            let harmonic: f64 = (1..=dmax).map(|k| 1.0 / k as f64).sum();
            assert!(best <= added, "case {case} node {i}");
            assert!(added as f64 <= harmonic * best as f64 + 1e-12, "case {case} node {i}");
            checked += 1;
        }
    }
    assert!(checked > 100, "only {checked} rows needed a cover");
}

fn det(m: &DMatrix<f64>) -> f64 {
    m.determinant().abs()
}

#[test]
fn maxvol_beats_random_subsets() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let phi: Vec<f64> = (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let full = DMatrix::from_row_slice(20, 3, &phi);
        let sel = maxvol_select(&phi, 20, 3, 100, 0.0);
        assert_eq!(sel.len(), 3);
        let best = det(&full.select_rows(&sel));
        for _ in 0..200 {
            let rows = sample(&mut rng, 20, 3).into_vec();
            assert!(det(&full.select_rows(&rows)) <= best * (1.0 + 1e-12));
        }
    }
}

#[test]
fn ones_conserve_row_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let m = common::random_rect(&mut rng, 60, 60);
        let ones = MultiVector::from_column(vec![1.0; 60]);
        for rho in [0.5, 0.7, 0.9] {
            let f = filter_with_compensation(&m, &ones, rho).unwrap();
            assert!(f.nnz() <= m.nnz());
            for ((s, t), i) in f.row_sums().iter().zip(m.row_sums()).zip(0..) {
                let scale: f64 = m.row_iter(i).map(|e| e.1.abs()).sum();
                assert!((s - t).abs() <= 1e-13 * scale, "row {i}: {s} vs {t}");
            }
        }
    }
}

#[test]
fn compensation_never_hurts_the_action() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for case in 0..50 {
        let (m, n) = (rng.gen_range(10..80), rng.gen_range(10..80));
        let a = common::random_rect(&mut rng, m, n);
        let nt = rng.gen_range(2..5);
        let w = MultiVector::from_row_major(n, nt, (0..n * nt).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap();
        let rho = [0.5, 0.7, 0.9][case % 3];
        let comp = common::action_error(&a, &filter_with_compensation(&a, &w, rho).unwrap(), &w);
        let plain = common::action_error(&a, &common::drop_only(&a, rho), &w);
        assert!(comp <= plain * (1.0 + 1e-12) + 1e-14, "case {case}: {comp:e} > {plain:e}");
    }
}

#[test]
fn filtered_prolongation_keeps_coarse_operator_spd() {
    let a = common::poisson2d(10);
    let g = common::strong_graph(&a);
    let cf = pmis(&g, 1);
    let p = extended_i_weights(&a, &g, &cf).p;
    let w = MultiVector::from_column(vec![1.0; p.ncols()]);
    for rho in [0.5, 0.7, 0.9] {
        let pf = filter_with_compensation(&p, &w, rho).unwrap();
        assert!(pf.nnz() <= p.nnz());
        let ac = galerkin_product(&a, &pf).unwrap();
        let lmin = common::eigenvalues(&common::dense(&ac))[0];
        assert!(lmin > 0.0, "rho {rho}: {lmin}");
    }
}
