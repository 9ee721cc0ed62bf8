use std::fs::{self, File};
use std::io::{BufWriter, ErrorKind, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use amg_cli::config::{Input, Recipe, ReportFormat, RunConfig};
use amg_cli::run::{build_hierarchy, load, run};
use amg_core::krylov::history_csv;
use amg_core::problems::ProblemSpec;
use amg_core::sparse::io::{write_matrix_market_array, write_matrix_market_file};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

/// Algebraic multigrid preconditioned Krylov solver.
#[derive(Parser)]
#[command(name = "amg", version)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the preconditioner and solve A x = b.
    Solve(SolveArgs),
    /// Write a generated matrix in Matrix Market format.
    Gen(GenArgs),
    /// Build the preconditioner and print the level table.
    Inspect(SetupArgs),
}

#[derive(Args)]
struct SetupArgs {
    /// Generator such as poisson7:16,16,16 or elasticity:48,12,10
    #[arg(long = "gen", conflicts_with = "matrix", required_unless_present = "matrix")]
    generator: Option<String>,
    /// Matrix Market file.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Node coordinates (Matrix Market array, n x 3) for rigid-body test spaces.
    #[arg(long)]
    coords: Option<PathBuf>,
    /// TOML recipe with per-module sections.
    #[arg(long)]
    recipe: Option<PathBuf>,
    /// Extra setting, repeatable: --set fsai-nsteps=2
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    interp: Option<String>,
    #[arg(long)]
    smoother: Option<String>,
    #[arg(long)]
    soc: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    rtol: Option<String>,
    #[arg(long)]
    max_iters: Option<String>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    setup: SetupArgs,
    /// Right-hand side (Matrix Market array); default is a seeded random vector.
    #[arg(long)]
    rhs: Option<PathBuf>,
    #[arg(long)]
    rhs_seed: Option<String>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value = "text")]
    format: ReportFormat,
    /// Residual history CSV.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Generator such as poisson7:16,16,16
    spec: String,
    #[arg(short, long)]
    output: PathBuf,
    /// Also write node coordinates (elasticity only).
    #[arg(long)]
    coords: Option<PathBuf>,
}

impl SetupArgs {
    fn config(&self, rhs: Option<PathBuf>, rhs_seed: Option<&String>) -> Result<RunConfig> {
        let input = match (&self.generator, &self.matrix) {
            (Some(g), None) => Input::Generator(g.parse::<ProblemSpec>()?),
            (None, Some(m)) => Input::Matrix(m.clone()),
            _ => bail!("give exactly one of --gen or --matrix"),
        };
        let file = match &self.recipe {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Recipe::parse(&text).with_context(|| format!("in recipe {}", p.display()))?
            }
            None => Recipe::new(),
        };
        let env = Recipe::from_env(|k| std::env::var(k).ok())?;
        let mut flags = Recipe::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got '{kv}'"))?;
            flags.set(k, v)?;
        }
        let shorthands = [
            ("interp-kind", &self.interp),
            ("smoother", &self.smoother),
            ("soc-kind", &self.soc),
            ("soc-theta", &self.theta),
            ("solver", &self.solver),
            ("rtol", &self.rtol),
            ("max-iters", &self.max_iters),
            ("rhs-seed", &rhs_seed.cloned()),
        ];
        for (k, v) in shorthands {
            if let Some(v) = v {
                flags.set(k, v.as_str())?;
            }
        }
        Ok(RunConfig::build(input, self.coords.clone(), rhs, &[file, env, flags])?)
    }
}

/// Writes to standard output; a closed pipe (`amg ... | head`) is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn solve(args: &SolveArgs) -> Result<ExitCode> {
    let cfg = args.setup.config(args.rhs.clone(), args.rhs_seed.as_ref())?;
    let report = run(&cfg, args.history.is_some())?;
    if let Some(h) = &args.history {
        fs::write(h, history_csv(&report.history)).with_context(|| format!("writing {}", h.display()))?;
    }
    let text = report.emit(args.format);
    match &args.report {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => emit(&text)?,
    }
    Ok(if report.converged {
        ExitCode::SUCCESS
    } else {
        eprintln!("not converged after {} iterations", report.iterations);
        ExitCode::from(2)
    })
}

fn inspect(args: &SetupArgs) -> Result<ExitCode> {
    let cfg = args.config(None, None)?;
    let problem = load(&cfg.input, cfg.coords.as_deref())?;
    let h = build_hierarchy(&problem, &cfg)?;
    emit(&format!(
        "{} ({} unknowns, {} nonzeros)\n{}",
        problem.name,
        problem.a.nrows(),
        problem.a.nnz(),
        h.summary()
    ))?;
    Ok(ExitCode::SUCCESS)
}

fn generate(args: &GenArgs) -> Result<ExitCode> {
    let spec: ProblemSpec = args.spec.parse()?;
    let prob = spec.generate::<f64>()?;
    write_matrix_market_file(&prob.a, prob.a.is_symmetric(0.0), &args.output)?;
    match (&args.coords, &prob.coords) {
        (Some(path), Some(c)) => write_matrix_market_array(c, BufWriter::new(File::create(path)?))?,
        (Some(_), None) => bail!("generator '{spec}' has no node coordinates"),
        _ => {}
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let out = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Gen(a) => generate(a),
        Command::Inspect(a) => inspect(a),
    };
    out.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}
