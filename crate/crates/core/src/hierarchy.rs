//! Multilevel setup and V-cycle application.
//!
//! Each level holds its operator, a smoother and the prolongation to the next
//! level; the last level keeps a dense factorization instead. F/C splittings
//! are used through index maps only, no level is ever permuted.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::coarsen::{compute_soc, filter_soc, pmis, SocFilter, SocKind};
use crate::dense::DenseFactor;
use crate::error::{AmgError, Result};
use crate::interp::{
    bamg_prolongation, build_prolongation, filter_with_compensation, smooth_prolongation,
    BamgConfig, InterpKind,
};
use crate::scalar::Scalar;
use crate::smoother::{Smoother, SmootherConfig};
use crate::sparse::{
    galerkin_product, galerkin_product_unsymmetrized, transpose, MultiVector, SparseMatrix,
};
use crate::testspace::{analytic_near_kernel, orthonormalize, random_block, srqm, NearKernel, TestSpace};

/// Largest level that may be factored densely when coarsening gives up early.
pub const MAX_DENSE_DIM: usize = 6000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestSpaceKind {
    Constant,
    RigidBody,
    /// SRQM from a seeded random block.
    Srqm,
    /// SRQM started from the analytic kernel (constant or rigid body).
    SrqmFromAnalytic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestSpaceConfig {
    pub kind: TestSpaceKind,
    /// Block size for the random SRQM start.
    pub n_vectors: usize,
    pub srqm_iters: usize,
    pub seed: u64,
}

impl Default for TestSpaceConfig {
    fn default() -> Self {
        TestSpaceConfig {
            kind: TestSpaceKind::Constant,
            n_vectors: 4,
            srqm_iters: 10,
            seed: 7,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterTarget {
    Prolongation,
    Operator,
    Both,
}

impl FilterTarget {
    pub fn filters_prolongation(self) -> bool {
        matches!(self, FilterTarget::Prolongation | FilterTarget::Both)
    }

    pub fn filters_operator(self) -> bool {
        matches!(self, FilterTarget::Operator | FilterTarget::Both)
    }
}

/// Row-norm fraction kept by the compensated filter; `rho == 1` disables it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterConfig {
    pub rho: f64,
    pub target: FilterTarget,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            rho: 1.0,
            target: FilterTarget::Prolongation,
        }
    }
}

impl FilterConfig {
    pub fn active(&self) -> bool {
        self.rho < 1.0
    }

    /// True when the coarse operators may lose symmetry.
    pub fn breaks_symmetry(&self) -> bool {
        self.active() && self.target.filters_operator()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmgConfig {
    pub smoother: SmootherConfig,
    pub nu1: usize,
    pub nu2: usize,
    pub testspace: TestSpaceConfig,
    pub soc: SocKind,
    /// `None` uses the kind's default rule.
    pub soc_filter: Option<SocFilter>,
    pub coarsen_seed: u64,
    pub interp: InterpKind,
    pub bamg: BamgConfig,
    pub smooth_prolongation: bool,
    pub filter: FilterConfig,
    pub max_coarse: usize,
    pub max_levels: usize,
    pub stall_fraction: f64,
}

impl Default for AmgConfig {
    fn default() -> Self {
        AmgConfig {
            smoother: SmootherConfig::default(),
            nu1: 1,
            nu2: 1,
            testspace: TestSpaceConfig::default(),
            soc: SocKind::Classical,
            soc_filter: None,
            coarsen_seed: 1,
            interp: InterpKind::ExtendedI,
            bamg: BamgConfig::default(),
            smooth_prolongation: false,
            filter: FilterConfig::default(),
            max_coarse: 200,
            max_levels: 20,
            stall_fraction: 0.9,
        }
    }
}

impl AmgConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(AmgError::InvalidParameter(m));
        if self.nu1 + self.nu2 == 0 {
            return bad("at least one smoothing step is required".into());
        }
        if self.max_levels == 0 {
            return bad("max_levels must be positive".into());
        }
        if !(self.stall_fraction > 0.0 && self.stall_fraction <= 1.0) {
            return bad(format!("stall fraction {} outside (0, 1]", self.stall_fraction));
        }
        if !(self.filter.rho > 0.0 && self.filter.rho <= 1.0) {
            return bad(format!("filter fraction {} outside (0, 1]", self.filter.rho));
        }
        if self.testspace.srqm_iters == 0
            && matches!(
                self.testspace.kind,
                TestSpaceKind::Srqm | TestSpaceKind::SrqmFromAnalytic
            )
        {
            return bad("srqm needs at least one iteration".into());
        }
        if self.testspace.kind == TestSpaceKind::Srqm && self.testspace.n_vectors == 0 {
            return bad("random test space needs at least one vector".into());
        }
        Ok(())
    }

    /// Whether setup has to build a test space at all.
    pub fn needs_testspace(&self) -> bool {
        self.interp == InterpKind::Bamg || self.soc == SocKind::Affinity || self.filter.active()
    }
}

/// Setup diagnostics of one non-final level.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LevelStats {
    pub orphans: usize,
    pub interp_warnings: usize,
    pub smoother_fallback_rows: usize,
    pub fsai_density: Option<f64>,
    pub omega: f64,
}

#[derive(Clone, Debug)]
pub struct Level<T> {
    pub a: SparseMatrix<T>,
    /// Absent on the last level.
    pub smoother: Option<Smoother<T>>,
    pub p: Option<SparseMatrix<T>>,
    pub(crate) pt: Option<SparseMatrix<T>>,
    pub testspace: Option<TestSpace<T>>,
    pub stats: LevelStats,
}

#[derive(Clone, Debug)]
pub struct AmgHierarchy<T> {
    pub levels: Vec<Level<T>>,
    pub coarsest_factor: DenseFactor<T>,
    pub nu1: usize,
    pub nu2: usize,
    pub config: AmgConfig,
    /// False once operator filtering produced a non-symmetric level.
    pub symmetric: bool,
}

/// Size summary of one level.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelInfo {
    pub n: usize,
    pub nnz: usize,
    /// `n_k / n_{k-1}`, `None` on the finest level.
    pub ratio: Option<f64>,
}

fn dense_factor<T: Scalar>(a: &SparseMatrix<T>, symmetric: bool) -> Result<DenseFactor<T>> {
    if a.nrows() > MAX_DENSE_DIM {
        return Err(AmgError::InvalidParameter(format!(
            "coarsening stopped at {} unknowns, too many for the direct solve (limit {})",
            a.nrows(),
            MAX_DENSE_DIM
        )));
    }
    DenseFactor::factor(&a.to_dense(), a.nrows(), symmetric)
}

fn initial_testspace<T: Scalar>(
    a: &SparseMatrix<T>,
    s: &Smoother<T>,
    cfg: &TestSpaceConfig,
    coords: Option<&MultiVector<T>>,
) -> Result<TestSpace<T>> {
    let n = a.nrows();
    let analytic = || match coords {
        Some(c) => analytic_near_kernel(NearKernel::RigidBody3D, n, Some(c)),
        None => analytic_near_kernel(NearKernel::Constant, n, None),
    };
    let mut ts = match cfg.kind {
        TestSpaceKind::Constant => analytic_near_kernel(NearKernel::Constant, n, None)?,
        TestSpaceKind::RigidBody => {
            if coords.is_none() {
                return Err(AmgError::Config(
                    "rigid-body test space needs node coordinates".into(),
                ));
            }
            analytic()?
        }
        TestSpaceKind::Srqm => srqm(a, s, &random_block(n, cfg.n_vectors, cfg.seed), cfg.srqm_iters)?,
        TestSpaceKind::SrqmFromAnalytic => srqm(a, s, &analytic()?.v, cfg.srqm_iters)?,
    };
    if ts.rayleigh.is_empty() {
        ts.measure(a)?;
    }
    Ok(ts)
}

/// Builds the multigrid hierarchy of `a`.
pub fn setup<T: Scalar>(a: &SparseMatrix<T>, cfg: &AmgConfig) -> Result<AmgHierarchy<T>> {
    setup_with_coords(a, cfg, None)
}

/// Like [`setup`], with node coordinates for the rigid-body test space.
pub fn setup_with_coords<T: Scalar>(
    a: &SparseMatrix<T>,
    cfg: &AmgConfig,
    coords: Option<&MultiVector<T>>,
) -> Result<AmgHierarchy<T>> {
    cfg.validate()?;
    if !a.is_square() {
        return Err(AmgError::dims(
            "setup",
            "square matrix",
            format!("{}x{}", a.nrows(), a.ncols()),
        ));
    }
    if a.nrows() == 0 {
        return Err(AmgError::InvalidParameter("empty matrix".into()));
    }
    let soc_rule = cfg.soc_filter.unwrap_or_else(|| SocFilter::default_for(cfg.soc));
    let mut levels: Vec<Level<T>> = Vec::new();
    let mut current = a.clone();
    let mut symmetric = true;
    let mut v: Option<MultiVector<T>> = None;

    loop {
        let n = current.nrows();
        let depth = levels.len();
        if n <= cfg.max_coarse || depth + 1 >= cfg.max_levels {
            break;
        }
        let smoother = Smoother::build(&current, &cfg.smoother)?;
        let testspace = if cfg.needs_testspace() {
            Some(match v.take() {
                None => initial_testspace(&current, &smoother, &cfg.testspace, coords)?,
                Some(w) => {
                    let mut ts = TestSpace::from_vectors(w)?;
                    ts.measure(&current)?;
                    ts
                }
            })
        } else {
            None
        };
        let basis = testspace.as_ref().map(|t| &t.v);
        let g = compute_soc(&current, cfg.soc, basis)?;
        let g = filter_soc(&g, soc_rule)?;
        let cf = pmis(&g, cfg.coarsen_seed.wrapping_add(depth as u64));
        let nc = cf.n_coarse();
        if nc == 0 || nc as f64 >= cfg.stall_fraction * n as f64 {
            break;
        }
        let prol = match cfg.interp {
            InterpKind::Bamg => bamg_prolongation(&g, &cf, basis.expect("test space"), &cfg.bamg)?,
            kind => build_prolongation(kind, &current, &g, &cf),
        };
        let mut p = prol.p;
        if cfg.smooth_prolongation {
            p = smooth_prolongation(&current, &p, None)?;
        }
        let coarse_v = match &testspace {
            Some(ts) => Some(orthonormalize(&ts.v.select_rows(cf.coarse_nodes()))?),
            None => None,
        };
        if cfg.filter.active() && cfg.filter.target.filters_prolongation() {
            p = filter_with_compensation(&p, coarse_v.as_ref().expect("test space"), cfg.filter.rho)?;
        }
        let mut next = if symmetric {
            galerkin_product(&current, &p)?
        } else {
            galerkin_product_unsymmetrized(&current, &p)?
        };
        if cfg.filter.breaks_symmetry() {
            next = filter_with_compensation(&next, coarse_v.as_ref().expect("test space"), cfg.filter.rho)?;
            symmetric = false;
        }
        let stats = LevelStats {
            orphans: prol.orphans.len(),
            interp_warnings: prol.warnings,
            smoother_fallback_rows: smoother.fallback_rows,
            fsai_density: smoother.density,
            omega: smoother.omega.as_f64(),
        };
        let pt = transpose(&p);
        levels.push(Level {
            a: std::mem::replace(&mut current, next),
            smoother: Some(smoother),
            p: Some(p),
            pt: Some(pt),
            testspace,
            stats,
        });
        v = coarse_v;
    }

    let coarsest_factor = dense_factor(&current, symmetric)?;
    let testspace = match v {
        Some(w) if cfg.needs_testspace() => Some(TestSpace::from_vectors(w)?),
        _ => None,
    };
    levels.push(Level {
        a: current,
        smoother: None,
        p: None,
        pt: None,
        testspace,
        stats: LevelStats::default(),
    });
    Ok(AmgHierarchy {
        levels,
        coarsest_factor,
        nu1: cfg.nu1,
        nu2: cfg.nu2,
        config: cfg.clone(),
        symmetric,
    })
}

impl<T: Scalar> AmgHierarchy<T> {
    /// Hierarchy from a fine operator and explicit prolongations, with
    /// Galerkin coarse operators and `cfg`'s smoother on every non-final level.
    pub fn from_prolongations(
        a: &SparseMatrix<T>,
        prolongations: Vec<SparseMatrix<T>>,
        cfg: &AmgConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut levels = Vec::with_capacity(prolongations.len() + 1);
        let mut current = a.clone();
        for p in prolongations {
            let next = galerkin_product(&current, &p)?;
            let smoother = Smoother::build(&current, &cfg.smoother)?;
            let stats = LevelStats {
                omega: smoother.omega.as_f64(),
                fsai_density: smoother.density,
                smoother_fallback_rows: smoother.fallback_rows,
                ..LevelStats::default()
            };
            levels.push(Level {
                a: std::mem::replace(&mut current, next),
                smoother: Some(smoother),
                pt: Some(transpose(&p)),
                p: Some(p),
                testspace: None,
                stats,
            });
        }
        let coarsest_factor = dense_factor(&current, true)?;
        levels.push(Level {
            a: current,
            smoother: None,
            p: None,
            pt: None,
            testspace: None,
            stats: LevelStats::default(),
        });
        Ok(AmgHierarchy {
            levels,
            coarsest_factor,
            nu1: cfg.nu1,
            nu2: cfg.nu2,
            config: cfg.clone(),
            symmetric: true,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn dim(&self) -> usize {
        self.levels[0].a.nrows()
    }

    pub fn level_info(&self) -> Vec<LevelInfo> {
        let mut prev: Option<usize> = None;
        self.levels
            .iter()
            .map(|l| {
                let n = l.a.nrows();
                let info = LevelInfo {
                    n,
                    nnz: l.a.nnz(),
                    ratio: prev.map(|p| n as f64 / p as f64),
                };
                prev = Some(n);
                info
            })
            .collect()
    }

    /// Grid and operator complexities `(C_gd, C_op)`.
    pub fn complexities(&self) -> (f64, f64) {
        complexities(&self.level_info())
    }

    /// One V-cycle `z = B y` for a single vector.
    pub fn apply(&self, y: &[T], z: &mut [T]) -> Result<()> {
        if y.len() != self.dim() || z.len() != self.dim() {
            return Err(AmgError::dims("vcycle", self.dim(), y.len()));
        }
        let out = self.cycle(0, y);
        z.copy_from_slice(&out);
        Ok(())
    }

    fn cycle(&self, k: usize, y: &[T]) -> Vec<T> {
        let level = &self.levels[k];
        let (Some(s), Some(p), Some(pt)) = (&level.smoother, &level.p, &level.pt) else {
            let mut z = y.to_vec();
            self.coarsest_factor.solve_in_place(&mut z);
            return z;
        };
        let a = &level.a;
        let mut x = vec![T::zero(); y.len()];
        s.smooth(a, y, &mut x, self.nu1);
        let mut r = vec![T::zero(); y.len()];
        a.mul_vec(&x, &mut r);
        for (ri, yi) in r.iter_mut().zip(y) {
            *ri = *yi - *ri;
        }
        let rc = pt.apply(&r);
        let dc = self.cycle(k + 1, &rc);
        let mut d = vec![T::zero(); y.len()];
        p.mul_vec(&dc, &mut d);
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += *di;
        }
        s.smooth(a, y, &mut x, self.nu2);
        x
    }

    /// Per-level table and complexities, as printed by `inspect`.
    pub fn summary(&self) -> String {
        format_summary(&self.level_info())
    }
}

/// Applies one V-cycle to every column of `y`.
pub fn vcycle<T: Scalar>(h: &AmgHierarchy<T>, y: &MultiVector<T>) -> Result<MultiVector<T>> {
    if y.nrows() != h.dim() {
        return Err(AmgError::dims("vcycle", h.dim(), y.nrows()));
    }
    let cols: Vec<Vec<T>> = (0..y.ncols())
        .into_par_iter()
        .map(|j| h.cycle(0, &y.column(j)))
        .collect();
    MultiVector::from_columns(&cols)
}

/// `(Σ n_k / n_0, Σ nnz_k / nnz_0)`.
pub fn complexities(levels: &[LevelInfo]) -> (f64, f64) {
    let Some(first) = levels.first() else {
        return (0.0, 0.0);
    };
    let n: usize = levels.iter().map(|l| l.n).sum();
    let nnz: usize = levels.iter().map(|l| l.nnz).sum();
    (
        n as f64 / first.n as f64,
        nnz as f64 / first.nnz.max(1) as f64,
    )
}

pub fn format_summary(levels: &[LevelInfo]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "level        rows         nnz  nnz/row   ratio");
    for (k, l) in levels.iter().enumerate() {
        let ratio = l.ratio.map_or("-".to_string(), |r| format!("{r:.3}"));
        let _ = writeln!(
            s,
            "{k:>5} {:>11} {:>11} {:>8.2} {:>7}",
            l.n,
            l.nnz,
            l.nnz as f64 / l.n.max(1) as f64,
            ratio
        );
    }
    let (cg, co) = complexities(levels);
    let _ = writeln!(s, "grid complexity     {cg:.3}");
    let _ = writeln!(s, "operator complexity {co:.3}");
    s
}
