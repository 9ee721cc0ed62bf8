mod common;

use amg_core::coarsen::{compute_soc, filter_soc, pmis, SocFilter, SocKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn pmis_is_a_maximal_independent_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..100 {
        let g = common::random_filtered_graph(&mut rng, case);
        let cf = pmis(&g, case);
        let bad = common::mis_violations(&g, &cf);
        assert!(bad.is_empty(), "case {case}: {bad:?}");
        assert_eq!(pmis(&g, case).labels(), cf.labels());
    }
}

#[test]
fn avg_degree_is_close_to_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for d in [2.0, 3.0, 4.0] {
        let a = common::random_mmatrix(&mut rng, 400, 12.0);
        let g = filter_soc(&compute_soc(&a, SocKind::StrongCoupling, None).unwrap(), SocFilter::AvgDegree(d))
            .unwrap();
        let realized = g.n_kept() as f64 / g.n() as f64;
        assert!((realized - d).abs() <= 0.15 * d, "target {d}, got {realized}");
    }
}
