//! Solver recipes: flat `key = value` settings grouped in per-module sections.
//!
//! Values come from a recipe file, then `AMG_*` environment variables, then
//! command-line flags; later sources win. Every key is checked against
//! [`KEYS`].

use std::collections::BTreeMap;
use std::path::PathBuf;

use amg_core::coarsen::{SocFilter, SocKind};
use amg_core::hierarchy::{AmgConfig, FilterTarget, TestSpaceKind};
use amg_core::interp::InterpKind;
use amg_core::krylov::{KrylovConfig, KrylovMethod};
use amg_core::problems::ProblemSpec;
use amg_core::smoother::SmootherKind;
use amg_core::AmgError;

pub const ENV_PREFIX: &str = "AMG_";

/// `(section, key, help)` for every recognised setting.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("smoother", "smoother", "jacobi | fsai"),
    ("smoother", "relax-target", "omega * rho(M^-1 A)"),
    ("smoother", "power-iters", "power iterations for rho"),
    ("smoother", "smoother-seed", "seed of the power method"),
    ("smoother", "fsai-nsteps", "FSAI pattern growth steps"),
    ("smoother", "fsai-candidates", "FSAI entries added per row and step"),
    ("smoother", "fsai-density", "FSAI target density"),
    ("smoother", "nu1", "pre-smoothing steps"),
    ("smoother", "nu2", "post-smoothing steps"),
    ("testspace", "testspace-kind", "constant | rigid-body | srqm | srqm-from-analytic"),
    ("testspace", "srqm-iters", "SRQM iterations"),
    ("testspace", "n-test-vectors", "random SRQM block size"),
    ("testspace", "testspace-seed", "seed of the random block"),
    ("coarsen", "soc-kind", "classical | strong-coupling | affinity"),
    ("coarsen", "soc-theta", "threshold filter"),
    ("coarsen", "soc-avg-degree", "average-degree filter"),
    ("coarsen", "coarsen-seed", "PMIS seed"),
    ("interp", "interp-kind", "classical | extended-i | hybrid | bamg"),
    ("interp", "bamg-lmin", "smallest BAMG distance"),
    ("interp", "bamg-lmax", "largest BAMG distance"),
    ("interp", "bamg-eps", "BAMG residual bound"),
    ("interp", "bamg-mu", "BAMG weight-norm bound"),
    ("interp", "bamg-max-swaps", "maxvol swaps"),
    ("interp", "smooth-prolongation", "on | off"),
    ("interp", "filter-rho", "kept fraction of each row's absolute sum"),
    ("interp", "filter-target", "prolongation | operator | both"),
    ("hierarchy", "max-coarse", "direct solve below this size"),
    ("hierarchy", "max-levels", "level cap"),
    ("hierarchy", "stall-fraction", "stop when n_c >= fraction * n"),
    ("krylov", "solver", "pcg | bicgstab"),
    ("krylov", "rtol", "relative residual tolerance"),
    ("krylov", "max-iters", "iteration cap"),
    ("run", "rhs-seed", "seed of the random right-hand side"),
];

fn section_of(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|k| k.1 == key).map(|k| k.0)
}

fn config_err(msg: impl Into<String>) -> AmgError {
    AmgError::Config(msg.into())
}

/// Validated key/value settings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Recipe {
    values: BTreeMap<String, String>,
}

impl Recipe {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), AmgError> {
        let key = key.trim();
        if section_of(key).is_none() {
            return Err(config_err(format!("unknown key '{key}'")));
        }
        self.values.insert(key.to_string(), value.into().trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entries of `other` replace those of `self`.
    pub fn merge(&mut self, other: &Recipe) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    /// Parses a TOML recipe. Keys may sit at top level or in the section
    /// they belong to.
    pub fn parse(text: &str) -> Result<Self, AmgError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            let line = e
                .span()
                .map(|s| text[..s.start].matches('\n').count() + 1)
                .unwrap_or(0);
            AmgError::Parse {
                line,
                msg: e.message().to_string(),
            }
        })?;
        let mut r = Recipe::new();
        for (name, value) in &table {
            match value {
                toml::Value::Table(entries) => {
                    if !KEYS.iter().any(|k| k.0 == name) {
                        return Err(config_err(format!("unknown section [{name}]")));
                    }
                    for (key, v) in entries {
                        match section_of(key) {
                            Some(s) if s == name => r.set(key, scalar_text(key, v)?)?,
                            Some(s) => {
                                return Err(config_err(format!(
                                    "key '{key}' belongs in [{s}], not [{name}]"
                                )))
                            }
                            None => return Err(config_err(format!("unknown key '{key}' in [{name}]"))),
                        }
                    }
                }
                v => r.set(name, scalar_text(name, v)?)?,
            }
        }
        Ok(r)
    }

    /// Reads `AMG_<KEY>` (upper case, dashes as underscores) through `lookup`.
    pub fn from_env(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, AmgError> {
        let mut r = Recipe::new();
        for (_, key, _) in KEYS {
            if let Some(v) = lookup(&env_name(key)) {
                r.set(key, v)?;
            }
        }
        Ok(r)
    }

    fn parsed<V: std::str::FromStr>(&self, key: &str) -> Result<Option<V>, AmgError>
    where
        V::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<V>()
                    .map_err(|e| config_err(format!("{key} = '{v}': {e}")))
            })
            .transpose()
    }

    fn choice<V: Copy>(&self, key: &str, options: &[(&str, V)]) -> Result<Option<V>, AmgError> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        let lower = v.to_ascii_lowercase();
        options
            .iter()
            .find(|o| o.0 == lower)
            .map(|o| Some(o.1))
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|o| o.0).collect();
                config_err(format!("{key} = '{v}': expected one of {}", names.join(", ")))
            })
    }

    /// Applies every setting to the library configurations. Returns the
    /// explicitly requested Krylov method, if any.
    pub fn apply(
        &self,
        amg: &mut AmgConfig,
        krylov: &mut KrylovConfig,
    ) -> Result<Option<KrylovMethod>, AmgError> {
        macro_rules! num {
            ($key:literal, $target:expr) => {
                if let Some(v) = self.parsed($key)? {
                    $target = v;
                }
            };
        }
        if let Some(k) = self.choice(
            "smoother",
            &[("jacobi", SmootherKind::Jacobi), ("fsai", SmootherKind::Fsai)],
        )? {
            amg.smoother.kind = k;
        }
        if let Some(v) = self.parsed::<f64>("relax-target")? {
            amg.smoother.relax_target = Some(v);
        }
        num!("power-iters", amg.smoother.power_iters);
        num!("smoother-seed", amg.smoother.seed);
        num!("fsai-nsteps", amg.smoother.fsai.nsteps);
        num!("fsai-candidates", amg.smoother.fsai.candidates_per_step);
        num!("fsai-density", amg.smoother.fsai.target_density);
        num!("nu1", amg.nu1);
        num!("nu2", amg.nu2);

        if let Some(k) = self.choice(
            "testspace-kind",
            &[
                ("constant", TestSpaceKind::Constant),
                ("rigid-body", TestSpaceKind::RigidBody),
                ("srqm", TestSpaceKind::Srqm),
                ("srqm-from-analytic", TestSpaceKind::SrqmFromAnalytic),
            ],
        )? {
            amg.testspace.kind = k;
        }
        num!("srqm-iters", amg.testspace.srqm_iters);
        num!("n-test-vectors", amg.testspace.n_vectors);
        num!("testspace-seed", amg.testspace.seed);

        if let Some(k) = self.choice(
            "soc-kind",
            &[
                ("classical", SocKind::Classical),
                ("strong-coupling", SocKind::StrongCoupling),
                ("affinity", SocKind::Affinity),
            ],
        )? {
            amg.soc = k;
        }
        match (self.parsed::<f64>("soc-theta")?, self.parsed::<f64>("soc-avg-degree")?) {
            (Some(_), Some(_)) => {
                return Err(config_err(
                    "soc-theta and soc-avg-degree select different filters; set only one",
                ))
            }
            (Some(t), None) => amg.soc_filter = Some(SocFilter::Threshold(t)),
            (None, Some(d)) => amg.soc_filter = Some(SocFilter::AvgDegree(d)),
            (None, None) => {}
        }
        num!("coarsen-seed", amg.coarsen_seed);

        if let Some(k) = self.choice(
            "interp-kind",
            &[
                ("classical", InterpKind::Classical),
                ("extended-i", InterpKind::ExtendedI),
                ("hybrid", InterpKind::Hybrid),
                ("bamg", InterpKind::Bamg),
            ],
        )? {
            amg.interp = k;
        }
        num!("bamg-lmin", amg.bamg.l_min);
        num!("bamg-lmax", amg.bamg.l_max);
        if let Some(v) = self.parsed::<f64>("bamg-eps")? {
            amg.bamg.eps = Some(v);
        }
        num!("bamg-mu", amg.bamg.mu);
        num!("bamg-max-swaps", amg.bamg.max_swaps);
        if let Some(on) = self.choice(
            "smooth-prolongation",
            &[("on", true), ("true", true), ("off", false), ("false", false)],
        )? {
            amg.smooth_prolongation = on;
        }
        num!("filter-rho", amg.filter.rho);
        if let Some(t) = self.choice(
            "filter-target",
            &[
                ("prolongation", FilterTarget::Prolongation),
                ("operator", FilterTarget::Operator),
                ("both", FilterTarget::Both),
            ],
        )? {
            amg.filter.target = t;
        }
        num!("max-coarse", amg.max_coarse);
        num!("max-levels", amg.max_levels);
        num!("stall-fraction", amg.stall_fraction);

        num!("rtol", krylov.rtol);
        num!("max-iters", krylov.max_iters);
        let method = self.choice(
            "solver",
            &[("pcg", KrylovMethod::Pcg), ("bicgstab", KrylovMethod::BiCgStab)],
        )?;
        amg.validate()?;
        if !(krylov.rtol > 0.0) {
            return Err(config_err(format!("rtol must be positive, got {}", krylov.rtol)));
        }
        Ok(method)
    }
}

pub fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.to_ascii_uppercase().replace('-', "_"))
}

fn scalar_text(key: &str, v: &toml::Value) -> Result<String, AmgError> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        _ => return Err(config_err(format!("key '{key}' needs a scalar value"))),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Input {
    Matrix(PathBuf),
    Generator(ProblemSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rhs {
    Random(u64),
    File(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = AmgError;

    fn from_str(s: &str) -> Result<Self, AmgError> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            o => Err(config_err(format!("unknown report format '{o}'"))),
        }
    }
}

/// Everything one `solve` needs.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub input: Input,
    pub coords: Option<PathBuf>,
    pub rhs: Rhs,
    pub amg: AmgConfig,
    pub krylov: KrylovConfig,
    /// Solver asked for explicitly; `None` lets the filter settings decide.
    pub solver: Option<KrylovMethod>,
}

impl RunConfig {
    /// Combines the layers (lowest priority first) on top of the defaults.
    pub fn build(
        input: Input,
        coords: Option<PathBuf>,
        rhs_file: Option<PathBuf>,
        layers: &[Recipe],
    ) -> Result<Self, AmgError> {
        let mut merged = Recipe::new();
        for l in layers {
            merged.merge(l);
        }
        let mut amg = AmgConfig::default();
        let mut krylov = KrylovConfig::default();
        let solver = merged.apply(&mut amg, &mut krylov)?;
        let rhs = match rhs_file {
            Some(p) => Rhs::File(p),
            None => Rhs::Random(merged.parsed("rhs-seed")?.unwrap_or(1)),
        };
        // fail before any work if the solver cannot handle the recipe
        amg_core::krylov::select_method(solver, &amg)?;
        Ok(RunConfig {
            input,
            coords,
            rhs,
            amg,
            krylov,
            solver,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_top_level_keys() {
        let r = Recipe::parse(
            "rtol = 1e-6\n[smoother]\nsmoother = \"fsai\"\nnu1 = 2\n[interp]\ninterp-kind = \"bamg\"\nsmooth-prolongation = true\n",
        )
        .unwrap();
        let mut amg = AmgConfig::default();
        let mut kc = KrylovConfig::default();
        assert_eq!(r.apply(&mut amg, &mut kc).unwrap(), None);
        assert_eq!(amg.smoother.kind, SmootherKind::Fsai);
        assert_eq!(amg.nu1, 2);
        assert_eq!(amg.interp, InterpKind::Bamg);
        assert!(amg.smooth_prolongation);
        assert_eq!(kc.rtol, 1e-6);
    }

    #[test]
    fn unknown_and_misplaced_keys() {
        assert!(Recipe::parse("[smoother]\ncolour = 1\n").is_err());
        assert!(Recipe::parse("[coarsen]\nnu1 = 1\n").is_err());
        assert!(Recipe::parse("[extras]\nnu1 = 1\n").is_err());
        assert!(Recipe::new().set("nope", "1").is_err());
    }

    #[test]
    fn parse_error_reports_line() {
        match Recipe::parse("nu1 = 1\nnu2 = \n") {
            Err(AmgError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn env_names_and_priority() {
        assert_eq!(env_name("soc-theta"), "AMG_SOC_THETA");
        let env = Recipe::from_env(|k| (k == "AMG_NU2").then(|| "3".to_string())).unwrap();
        let file = Recipe::parse("nu2 = 1\nnu1 = 4\n").unwrap();
        let mut flags = Recipe::new();
        flags.set("nu1", "5").unwrap();
        let cfg = RunConfig::build(
            Input::Generator("poisson7:4,4,4".parse().unwrap()),
            None,
            None,
            &[file, env, flags],
        )
        .unwrap();
        assert_eq!((cfg.amg.nu1, cfg.amg.nu2), (5, 3));
        assert_eq!(cfg.rhs, Rhs::Random(1));
    }

    #[test]
    fn conflicting_recipes_are_rejected() {
        let mut r = Recipe::new();
        r.set("soc-theta", "0.25").unwrap();
        r.set("soc-avg-degree", "4").unwrap();
        let input = Input::Generator("poisson7:4,4,4".parse().unwrap());
        assert!(RunConfig::build(input.clone(), None, None, &[r]).is_err());

        let mut r = Recipe::new();
        r.set("solver", "pcg").unwrap();
        r.set("filter-target", "operator").unwrap();
        r.set("filter-rho", "0.8").unwrap();
        let e = RunConfig::build(input, None, None, &[r]).unwrap_err();
        assert!(e.to_string().contains("no more guaranteed to be SPD"));
    }

    #[test]
    fn bad_values() {
        let mut r = Recipe::new();
        r.set("interp-kind", "cubic").unwrap();
        let input = Input::Generator("poisson7:4,4,4".parse().unwrap());
        assert!(RunConfig::build(input.clone(), None, None, &[r]).is_err());
        let mut r = Recipe::new();
        r.set("nu1", "-1").unwrap();
        assert!(RunConfig::build(input, None, None, &[r]).is_err());
    }
}
