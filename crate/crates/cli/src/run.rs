use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::Instant;

use amg_core::hierarchy::{setup_with_coords, AmgHierarchy};
use amg_core::krylov::{select_method, solve, KrylovConfig, KrylovMethod};
use amg_core::sparse::io::{read_matrix_market_array, read_matrix_market_file};
use amg_core::testspace::random_block;
use amg_core::{AmgError, Csr, Vectors};

use crate::config::{Input, Rhs, RunConfig};
use crate::report::{level_rows, millis, SolveReport, SCHEMA_VERSION};

pub struct LoadedProblem {
    pub name: String,
    pub a: Csr,
    pub coords: Option<Vectors>,
}

pub fn read_array(path: &Path) -> Result<Vectors, AmgError> {
    read_matrix_market_array(BufReader::new(File::open(path)?))
}

pub fn load(input: &Input, coords: Option<&Path>) -> Result<LoadedProblem, AmgError> {
    let (name, a, generated) = match input {
        Input::Matrix(p) => (p.display().to_string(), read_matrix_market_file(p)?, None),
        Input::Generator(spec) => {
            let prob = spec.generate::<f64>()?;
            (spec.to_string(), prob.a, prob.coords)
        }
    };
    if !a.is_square() {
        return Err(AmgError::dims(
            "input matrix",
            "square",
            format!("{}x{}", a.nrows(), a.ncols()),
        ));
    }
    let coords = match coords {
        Some(p) => Some(read_array(p)?),
        None => generated,
    };
    if let Some(c) = &coords {
        if c.ncols() != 3 || 3 * c.nrows() != a.nrows() {
            return Err(AmgError::dims(
                "coordinates",
                format!("{} x 3", a.nrows() / 3),
                format!("{} x {}", c.nrows(), c.ncols()),
            ));
        }
    }
    Ok(LoadedProblem { name, a, coords })
}

pub fn build_hierarchy(p: &LoadedProblem, cfg: &RunConfig) -> Result<AmgHierarchy<f64>, AmgError> {
    setup_with_coords(&p.a, &cfg.amg, p.coords.as_ref())
}

/// Loads or generates the matrix, builds the preconditioner and solves.
pub fn run(cfg: &RunConfig, record_history: bool) -> Result<SolveReport, AmgError> {
    let method = select_method(cfg.solver, &cfg.amg)?;
    let problem = load(&cfg.input, cfg.coords.as_deref())?;
    let n = problem.a.nrows();
    let b = match &cfg.rhs {
        Rhs::Random(seed) => random_block::<f64>(n, 1, *seed).column(0),
        Rhs::File(p) => {
            let v = read_array(p)?;
            if v.nrows() != n || v.ncols() != 1 {
                return Err(AmgError::dims("right-hand side", n, v.nrows()));
            }
            v.column(0)
        }
    };
    let t0 = Instant::now();
    let h = build_hierarchy(&problem, cfg)?;
    let setup = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let kc = KrylovConfig {
        method,
        record_history,
        ..cfg.krylov.clone()
    };
    let result = solve(&problem.a, &h, &b, None, &kc)?;
    let solve_time = t1.elapsed().as_secs_f64();
    let (c_gd, c_op) = h.complexities();
    Ok(SolveReport {
        schema_version: SCHEMA_VERSION,
        problem: problem.name,
        n,
        nnz: problem.a.nnz(),
        solver: match method {
            KrylovMethod::Pcg => "pcg",
            KrylovMethod::BiCgStab => "bicgstab",
        }
        .into(),
        converged: result.converged,
        iterations: result.iterations,
        rel_residual: result.rel_residual,
        c_gd,
        c_op,
        setup_time: millis(setup),
        solve_time: millis(solve_time),
        total_time: millis(setup + solve_time),
        orphans: h.levels.iter().map(|l| l.stats.orphans).sum(),
        levels: level_rows(&h.level_info()),
        history: result.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Recipe;

    fn poisson_cfg(extra: &[(&str, &str)]) -> RunConfig {
        let mut r = Recipe::new();
        for (k, v) in extra {
            r.set(k, *v).unwrap();
        }
        RunConfig::build(
            Input::Generator("poisson7:10,10,10".parse().unwrap()),
            None,
            None,
            &[r],
        )
        .unwrap()
    }

    #[test]
    fn end_to_end_poisson() {
        let r = run(&poisson_cfg(&[("interp-kind", "extended-i")]), true).unwrap();
        assert!(r.converged);
        assert_eq!(r.solver, "pcg");
        assert_eq!(r.history.len(), r.iterations + 1);
        assert!(r.c_gd >= 1.0 && r.c_op >= 1.0);
    }

    #[test]
    fn repeated_runs_match() {
        let cfg = poisson_cfg(&[("smoother", "fsai")]);
        let a = run(&cfg, false).unwrap();
        let b = run(&cfg, false).unwrap();
        assert_eq!(a.without_times(), b.without_times());
    }

    #[test]
    fn operator_filter_routes_to_bicgstab() {
        let r = run(
            &poisson_cfg(&[("filter-target", "operator"), ("filter-rho", "0.9")]),
            false,
        )
        .unwrap();
        assert_eq!(r.solver, "bicgstab");
        assert!(r.converged);
    }
}
