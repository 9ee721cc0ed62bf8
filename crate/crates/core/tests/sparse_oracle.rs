use amg_core::sparse::{galerkin_product, galerkin_product_unsymmetrized, spgemm, spmv, transpose};
use amg_core::{MultiVector, SparseMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-13;

fn random_sparse(rng: &mut ChaCha8Rng, m: usize, n: usize, density: f64) -> SparseMatrix<f64> {
    let mut t = Vec::new();
    for i in 0..m {
        for j in 0..n {
            if rng.gen::<f64>() < density {
                t.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    SparseMatrix::from_triplets(m, n, &t).unwrap()
}

fn dense(a: &SparseMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.nrows(), a.ncols(), &a.to_dense())
}

fn rel_err(got: &DMatrix<f64>, want: &DMatrix<f64>) -> f64 {
    assert_eq!(got.shape(), want.shape());
    let scale = want.norm().max(f64::MIN_POSITIVE);
    (got - want).norm() / scale
}

#[test]
fn kernels_match_dense_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let n = rng.gen_range(1..=200);
        let k = rng.gen_range(1..=200);
        let density = rng.gen_range(0.01..0.15);
        let a = random_sparse(&mut rng, n, n, density);
        let b = random_sparse(&mut rng, n, k, density);
        let da = dense(&a);
        let db = dense(&b);

        let nv = rng.gen_range(1..4);
        let xv: Vec<f64> = (0..n * nv).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = MultiVector::from_row_major(n, nv, xv.clone()).unwrap();
        let y = spmv(&a, &x).unwrap();
        let want = &da * DMatrix::from_row_slice(n, nv, &xv);
        let got = DMatrix::from_row_slice(n, nv, y.values());
        assert!(rel_err(&got, &want) <= TOL, "spmv case {case}");

        let e = rel_err(&dense(&spgemm(&a, &b).unwrap()), &(&da * &db));
        assert!(e <= TOL, "spgemm case {case}: {e:e}");

        assert_eq!(dense(&transpose(&b)), db.transpose(), "transpose case {case}");

        let e = rel_err(
            &dense(&galerkin_product_unsymmetrized(&a, &b).unwrap()),
            &(db.transpose() * &da * &db),
        );
        assert!(e <= TOL, "unsymmetrized galerkin case {case}: {e:e}");

        let s = a.add_scaled(1.0, &transpose(&a), 1.0).unwrap();
        let ds = dense(&s);
        let e = rel_err(&dense(&galerkin_product(&s, &b).unwrap()), &(db.transpose() * &ds * &db));
        assert!(e <= TOL, "galerkin case {case}: {e:e}");
    }
}

fn arb_matrix(max: usize) -> impl Strategy<Value = SparseMatrix<f64>> {
    (1..max, 1..max).prop_flat_map(|(m, n)| {
        prop::collection::vec((0..m, 0..n, -10.0..10.0f64), 0..4 * (m + n)).prop_map(
            move |t| SparseMatrix::from_triplets(m, n, &t).unwrap(),
        )
    })
}

proptest! {
    #[test]
    fn transpose_is_an_involution(a in arb_matrix(40)) {
        let tt = transpose(&transpose(&a));
        prop_assert_eq!(tt.to_dense(), a.to_dense());
    }

    #[test]
    fn spgemm_with_identity_is_exact(a in arb_matrix(40)) {
        let i = SparseMatrix::identity(a.ncols());
        prop_assert_eq!(spgemm(&a, &i).unwrap().to_dense(), a.to_dense());
    }

    #[test]
    fn galerkin_is_symmetric(a in arb_matrix(30), seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = a.nrows();
        let sq = random_sparse(&mut rng, n, n, 0.2);
        let s = sq.add_scaled(1.0, &transpose(&sq), 1.0).unwrap();
        let p = random_sparse(&mut rng, n, 1 + n / 2, 0.3);
        let c = galerkin_product(&s, &p).unwrap();
        prop_assert!(c.is_symmetric(0.0));
    }
}
