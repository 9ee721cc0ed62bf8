mod common;

use amg_core::hierarchy::{setup, AmgConfig};
use amg_core::krylov::{solve, KrylovConfig};
use amg_core::problems::{
    gen_elasticity3d, gen_heterogeneous, gen_poisson7, gen_rotated_anisotropy, hex_element_stiffness,
    BoundaryCondition,
};
use amg_core::sparse::spmv;
use amg_core::testspace::{analytic_near_kernel, random_block, NearKernel};
use nalgebra::DMatrix;

#[test]
fn small_poisson_is_positive_definite() {
    let a = gen_poisson7::<f64>(4, 4, 4).unwrap();
    let e = common::eigenvalues(&common::dense(&a));
    // 6 sin^2(pi / 10) per direction sums to the smallest eigenvalue
    let want = 3.0 * 4.0 * (std::f64::consts::PI / 10.0).sin().powi(2);
    assert!((e[0] - want).abs() < 1e-12, "{} vs {want}", e[0]);
}

#[test]
fn rotated_anisotropy_is_positive_definite() {
    let a = gen_rotated_anisotropy::<f64>(5, 5, 4, 30.0, 10.0, 1e-3, 1e-6).unwrap();
    let d = common::dense(&a);
    assert!((&d - d.transpose()).norm() <= 1e-14 * d.norm());
    assert!(common::eigenvalues(&d)[0] > 0.0);
}

#[test]
fn element_stiffness_has_rank_eighteen() {
    let k = hex_element_stiffness(1.0, 0.0);
    let m = DMatrix::from_fn(24, 24, |i, j| k[i][j]);
    assert!((&m - m.transpose()).norm() <= 1e-14 * m.norm());
    let e = common::eigenvalues(&m);
    let tol = 1e-10 * e[23];
    assert_eq!(e.iter().filter(|x| x.abs() <= tol).count(), 6);
    assert!(e[6] > tol);
}

#[test]
fn clamped_beam_is_positive_definite() {
    let (a, _) = gen_elasticity3d::<f64>(3, 2, 2, 1.0, 0.3, BoundaryCondition::Clamped).unwrap();
    assert_eq!(a.nrows(), 3 * 3 * 3 * 3);
    assert!(common::eigenvalues(&common::dense(&a))[0] > 0.0);
}

#[test]
fn free_beam_annihilates_rigid_body_modes() {
    let (a, xyz) = gen_elasticity3d::<f64>(4, 2, 2, 1e6, 0.45, BoundaryCondition::Free).unwrap();
    let ts = analytic_near_kernel(NearKernel::RigidBody3D, a.nrows(), Some(&xyz)).unwrap();
    assert_eq!(ts.n_vectors(), 6);
    let av = spmv(&a, &ts.v).unwrap();
    assert!(av.max_abs() <= 1e-10 * a.max_abs(), "{:e}", av.max_abs());
}

#[test]
fn heterogeneous_high_contrast_converges() {
    let a = gen_heterogeneous::<f64>(32, 32, 1e6, 1).unwrap();
    let h = setup(&a, &AmgConfig::default()).unwrap();
    let b = random_block::<f64>(a.nrows(), 1, 2).column(0);
    let r = solve(&a, &h, &b, None, &KrylovConfig::default()).unwrap();
    assert!(r.converged);
    assert!(r.iterations <= 100, "{} iterations", r.iterations);
}
