#![allow(dead_code)]

use amg_core::coarsen::{compute_soc, filter_soc, SocFilter, SocGraph, SocKind};
use amg_core::hierarchy::{vcycle, AmgConfig, AmgHierarchy};
use amg_core::testspace::random_block;
use amg_core::{CfPartition, MultiVector, SparseMatrix};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn poisson1d(n: usize) -> SparseMatrix<f64> {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 2.0));
        if i > 0 {
            t.push((i, i - 1, -1.0));
        }
        if i + 1 < n {
            t.push((i, i + 1, -1.0));
        }
    }
    SparseMatrix::from_triplets(n, n, &t).unwrap()
}

pub fn poisson2d(nx: usize) -> SparseMatrix<f64> {
    let n = nx * nx;
    let mut t = Vec::new();
    for y in 0..nx {
        for x in 0..nx {
            let i = y * nx + x;
            t.push((i, i, 4.0));
            if x > 0 {
                t.push((i, i - 1, -1.0));
            }
            if x + 1 < nx {
                t.push((i, i + 1, -1.0));
            }
            if y > 0 {
                t.push((i, i - nx, -1.0));
            }
            if y + 1 < nx {
                t.push((i, i + nx, -1.0));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &t).unwrap()
}

/// Symmetric, diagonally dominant M-matrix on a random graph with about
/// `degree` neighbours per node.
pub fn random_mmatrix(rng: &mut ChaCha8Rng, n: usize, degree: f64) -> SparseMatrix<f64> {
    let mut t = Vec::new();
    let mut diag = vec![0.1; n];
    let edges = (n as f64 * degree / 2.0) as usize;
    for _ in 0..edges {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i == j {
            continue;
        }
        let w = rng.gen_range(0.01..1.0);
        t.push((i, j, -w));
        t.push((j, i, -w));
        diag[i] += w;
        diag[j] += w;
    }
    for (i, d) in diag.into_iter().enumerate() {
        t.push((i, i, d));
    }
    SparseMatrix::from_triplets(n, n, &t).unwrap()
}

pub fn dense(a: &SparseMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.nrows(), a.ncols(), &a.to_dense())
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(|x, y| x.partial_cmp(y).unwrap());
    e
}

pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    b.transpose() * &b + DMatrix::identity(n, n) * (n as f64 / 10.0)
}

pub fn from_dense(d: &DMatrix<f64>) -> SparseMatrix<f64> {
    let row_major: Vec<f64> = d.transpose().as_slice().to_vec();
    SparseMatrix::from_dense(d.nrows(), d.ncols(), &row_major).unwrap()
}

pub fn strong_graph(a: &SparseMatrix<f64>) -> SocGraph<f64> {
    filter_soc(&compute_soc(a, SocKind::Classical, None).unwrap(), SocFilter::Threshold(0.25)).unwrap()
}

/// Independence and maximality violations on the undirected kept graph.
pub fn mis_violations(g: &SocGraph<f64>, cf: &CfPartition) -> Vec<String> {
    let adj = g.kept_adjacency();
    let mut bad = Vec::new();
    for i in 0..g.n() {
        if cf.is_coarse(i) {
            if let Some(j) = adj[i].iter().find(|&&j| cf.is_coarse(j)) {
                bad.push(format!("coarse {i} and {j} are joined"));
            }
        } else if !adj[i].is_empty() && !adj[i].iter().any(|&j| cf.is_coarse(j)) {
            bad.push(format!("fine {i} has no coarse neighbour"));
        }
        if adj[i].is_empty() && cf.is_coarse(i) != (g.degree(i) == 0) {
            bad.push(format!("isolated {i} labelled wrongly"));
        }
    }
    bad
}

/// Random filtered strength graph for case `case`, alternating measures
/// and filtering rules.
pub fn random_filtered_graph(rng: &mut ChaCha8Rng, case: u64) -> SocGraph<f64> {
    let n = rng.gen_range(2..=500);
    let degree = rng.gen_range(1.0..8.0);
    let a = random_mmatrix(rng, n, degree);
    let kind = if case % 2 == 0 { SocKind::Classical } else { SocKind::StrongCoupling };
    let rule = if case % 3 == 0 {
        SocFilter::AvgDegree(rng.gen_range(1.0..5.0))
    } else {
        SocFilter::Threshold(rng.gen_range(0.0..1.0))
    };
    filter_soc(&compute_soc(&a, kind, None).unwrap(), rule).unwrap()
}

// Named nodes of a small distance-two example: i with strong fine neighbours p, k, j, r
// and strong coarse neighbour o; m, n, l are distance-two coarse points.
pub mod names {
    pub const I: usize = 0;
    pub const P: usize = 1;
    pub const K: usize = 2;
    pub const J: usize = 3;
    pub const R: usize = 4;
    pub const O: usize = 5;
    pub const M: usize = 6;
    pub const N: usize = 7;
    pub const L: usize = 8;
}

pub fn distance_two_fixture() -> (SparseMatrix<f64>, CfPartition) {
    use names::*;
    let edges = [
        (I, P),
        (I, K),
        (I, J),
        (I, R),
        (I, O),
        (P, M),
        (P, O),
        (K, M),
        (K, N),
        (J, N),
        (J, L),
        (R, O),
        (R, L),
    ];
    let mut t = Vec::new();
    let mut deg = [0.0; 9];
    for (a, b) in edges {
        t.push((a, b, -1.0));
        t.push((b, a, -1.0));
        deg[a] += 1.0;
        deg[b] += 1.0;
    }
    for (v, d) in deg.iter().enumerate() {
        t.push((v, v, d + 1.0));
    }
    let a = SparseMatrix::from_triplets(9, 9, &t).unwrap();
    (a, CfPartition::from_coarse_nodes(9, &[O, M, N, L]).unwrap())
}

pub fn random_rect(rng: &mut ChaCha8Rng, m: usize, n: usize) -> SparseMatrix<f64> {
    let mut t = Vec::new();
    for i in 0..m {
        if i < n {
            t.push((i, i, 5.0));
        }
        for _ in 0..rng.gen_range(1..8) {
            t.push((i, rng.gen_range(0..n), rng.gen_range(-2.0..2.0)));
        }
    }
    SparseMatrix::from_triplets(m, n, &t).unwrap()
}

/// The filter's dropping rule without any compensation.
pub fn drop_only(m: &SparseMatrix<f64>, rho: f64) -> SparseMatrix<f64> {
    let mut t = Vec::new();
    for i in 0..m.nrows() {
        let mut e: Vec<(usize, f64)> = m.row_iter(i).collect();
        let total: f64 = e.iter().map(|x| x.1.abs()).sum();
        e.sort_by(|x, y| {
            (y.0 == i)
                .cmp(&(x.0 == i))
                .then(y.1.abs().partial_cmp(&x.1.abs()).unwrap())
                .then(x.0.cmp(&y.0))
        });
        let mut acc = 0.0;
        for (j, v) in e {
            if acc >= rho * total {
                break;
            }
            acc += v.abs();
            t.push((i, j, v));
        }
    }
    SparseMatrix::from_triplets(m.nrows(), m.ncols(), &t).unwrap()
}

/// `‖(M - F) W‖_F`.
pub fn action_error(m: &SparseMatrix<f64>, f: &SparseMatrix<f64>, w: &MultiVector<f64>) -> f64 {
    let d = dense(m) - dense(f);
    let wd = DMatrix::from_row_slice(w.nrows(), w.ncols(), w.values());
    (d * wd).norm()
}

/// Linear interpolation from the odd points of an 8-point grid.
pub fn linear_prolongation8() -> SparseMatrix<f64> {
    let mut t = Vec::new();
    for c in 0..4 {
        let f = 2 * c + 1;
        t.push((f, c, 1.0));
        t.push((f - 1, c, 0.5));
        if f + 1 < 8 {
            t.push((f + 1, c, 0.5));
        }
    }
    SparseMatrix::from_triplets(8, 4, &t).unwrap()
}

/// Dense `S^ν2 (I - P A_c^{-1} P^T A) S^ν1` with `S = I - M^{-1} A`.
pub fn two_grid_matrix(
    a: &DMatrix<f64>,
    p: &DMatrix<f64>,
    minv: &DMatrix<f64>,
    nu1: u32,
    nu2: u32,
) -> DMatrix<f64> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let s = &id - minv * a;
    let ac = p.transpose() * a * p;
    let coarse = &id - p * ac.try_inverse().unwrap() * p.transpose() * a;
    s.pow(nu2) * coarse * s.pow(nu1)
}

/// Largest relative deviation of the V-cycle error propagation `e - B A e`
/// from the dense two-grid matrix, over 20 random errors.
pub fn two_grid_deviation(nu1: usize, nu2: usize) -> f64 {
    let a = poisson1d(8);
    let p = linear_prolongation8();
    let da = dense(&a);
    let cfg = AmgConfig {
        nu1,
        nu2,
        ..AmgConfig::default()
    };
    let h = AmgHierarchy::from_prolongations(&a, vec![p.clone()], &cfg).unwrap();
    assert_eq!(h.n_levels(), 2);
    let sm = h.levels[0].smoother.as_ref().unwrap();
    let mut minv = DMatrix::zeros(8, 8);
    for j in 0..8 {
        let mut e = vec![0.0; 8];
        e[j] = 1.0;
        let mut z = vec![0.0; 8];
        sm.apply_inverse(&e, &mut z);
        for i in 0..8 {
            minv[(i, j)] = sm.omega * z[i];
        }
    }
    let m = two_grid_matrix(&da, &dense(&p), &minv, nu1 as u32, nu2 as u32);
    let errors = random_block::<f64>(8, 20, 4);
    let de = DMatrix::from_row_slice(8, 20, errors.values());
    let rhs = &da * &de;
    let y = MultiVector::from_row_major(8, 20, rhs.transpose().as_slice().to_vec()).unwrap();
    let bx = vcycle(&h, &y).unwrap();
    let mut worst = 0.0f64;
    for k in 0..20 {
        let e = de.column(k);
        let want = &m * e;
        let err = (0..8)
            .map(|i| (e[i] - bx.get(i, k) - want[i]).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(err / e.norm());
    }
    worst
}
