mod common;

use amg_core::hierarchy::{setup, AmgConfig, FilterConfig, FilterTarget};
use amg_core::krylov::{pcg, select_method, solve, Identity, KrylovConfig, KrylovMethod};
use amg_core::problems::gen_poisson7;
use amg_core::testspace::random_block;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn cg_on_dense_spd_matches_direct_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = common::random_spd(&mut rng, 50);
    let a = common::from_dense(&d);
    let b: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let cfg = KrylovConfig {
        rtol: 1e-12,
        ..KrylovConfig::default()
    };
    let r = pcg(&a, &Identity, &b, None, &cfg).unwrap();
    assert!(r.converged);
    assert!(r.iterations <= 50, "{} iterations", r.iterations);
    let exact = d.clone().cholesky().unwrap().solve(&DVector::from_vec(b));
    let x = DVector::from_vec(r.x);
    assert!((&x - &exact).norm() <= 1e-9 * exact.norm());
}

#[test]
fn cg_error_decreases_in_energy_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in [30, 120, 200] {
        let d = common::random_spd(&mut rng, n);
        let a = common::from_dense(&d);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let exact = d.clone().cholesky().unwrap().solve(&DVector::from_vec(b.clone()));
        let energy = |x: &[f64]| {
            let e = DVector::from_column_slice(x) - &exact;
            (e.transpose() * &d * &e)[(0, 0)].sqrt()
        };
        let mut last = energy(&vec![0.0; n]);
        for k in 1..=40 {
            let cfg = KrylovConfig {
                max_iters: k,
                rtol: 1e-14,
                ..KrylovConfig::default()
            };
            let r = pcg(&a, &Identity, &b, None, &cfg).unwrap();
            let now = energy(&r.x);
            assert!(now <= last * (1.0 + 1e-12), "n {n} step {k}: {now:e} > {last:e}");
            last = now;
        }
    }
}

#[test]
fn filtered_operator_needs_bicgstab_and_agrees_with_pcg() {
    let a = gen_poisson7::<f64>(16, 16, 16).unwrap();
    let b = random_block::<f64>(a.nrows(), 1, 99).column(0);
    let plain = AmgConfig::default();
    let filtered = AmgConfig {
        filter: FilterConfig {
            rho: 0.9,
            target: FilterTarget::Operator,
        },
        ..AmgConfig::default()
    };
    let err = select_method(Some(KrylovMethod::Pcg), &filtered).unwrap_err();
    assert!(err.to_string().contains("no more guaranteed to be SPD"));
    assert_eq!(select_method(None, &filtered).unwrap(), KrylovMethod::BiCgStab);

    let reference = solve(&a, &setup(&a, &plain).unwrap(), &b, None, &KrylovConfig::default()).unwrap();
    let cfg = KrylovConfig {
        method: KrylovMethod::BiCgStab,
        ..KrylovConfig::default()
    };
    let h = setup(&a, &filtered).unwrap();
    assert!(!h.symmetric);
    let r = solve(&a, &h, &b, None, &cfg).unwrap();
    assert!(reference.converged && r.converged);
    let diff: f64 = r.x.iter().zip(&reference.x).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = reference.x.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(diff <= 1e-6 * scale, "{:e}", diff / scale);
}
