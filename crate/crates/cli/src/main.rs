//! `teig`: real transmission eigenvalues of anisotropic media.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use teig_core::deflation::{self, ReducedPencil};
use teig_core::eigen::{self, ShiftInvertConfig};
use teig_core::harness::{self, ConvergenceReport, Preset};
use teig_core::mesh::{generate, read_mesh, refine, DomainSpec, Mesh};
use teig_core::{BlockPencil, Error, MaterialModel};

const EXIT_NONCONVERGENCE: u8 = 2;
const EXIT_INVALID: u8 = 3;

#[derive(Parser)]
#[command(name = "teig", version, about = "Real transmission eigenvalues by a deflated mixed finite element method")]
struct Cli {
    /// More log output (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Smallest real eigenvalues on one mesh
    Solve {
        #[command(flatten)]
        problem: Problem,
        /// Mesh level (refinements of a mesh file)
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        level: i32,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the eigenvalues as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the reduced pencil as MatrixMarket files `<prefix>_K.mtx`, `<prefix>_M.mtx`
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Eigenvalues over a range of levels with convergence rates
    Converge {
        #[command(flatten)]
        problem: Problem,
        /// Inclusive level range, `a..b`
        #[arg(long, allow_hyphen_values = true)]
        levels: String,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Solve levels concurrently
        #[arg(long)]
        parallel: bool,
    },
    /// Compare the full and reduced pencils with the dense solver
    VerifyDeflation {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
        level: i32,
    },
    /// First Dirichlet eigenvalue of the Laplacian
    Dirichlet {
        #[arg(long)]
        domain: String,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        level: i32,
    },
    /// Run a benchmark problem (ex1..ex8)
    Preset {
        name: String,
        /// Finest level to run
        #[arg(long, allow_hyphen_values = true)]
        max_level: Option<i32>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Directory for `<preset>_<material>.csv/.json/.plot.csv`
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Problem {
    /// Domain name or mesh file
    #[arg(long)]
    domain: String,
    /// Material preset (A1..A8) or the d*d entries of A, row-major
    #[arg(long, default_value = "A1")]
    material: String,
}

#[derive(Args)]
struct SolverArgs {
    /// Number of real eigenvalues
    #[arg(long, default_value_t = 6)]
    count: usize,
    /// Shift; defaults to just below the Dirichlet lower bound
    #[arg(long, allow_hyphen_values = true)]
    shift: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    krylov_dim: Option<usize>,
    #[arg(long, default_value_t = 50)]
    max_restarts: usize,
    #[arg(long, default_value_t = ShiftInvertConfig::default().seed)]
    seed: u64,
}

impl SolverArgs {
    fn config(&self) -> ShiftInvertConfig {
        ShiftInvertConfig {
            shift: self.shift,
            krylov_dim: self.krylov_dim,
            count: self.count,
            tol: self.tol,
            max_restarts: self.max_restarts,
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Refinement differences against h, for log-log plots
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Full report with solver settings
    #[arg(long)]
    json: Option<PathBuf>,
}

enum Outcome {
    Done,
    NotConverged,
}

fn parse_material(text: &str) -> teig_core::Result<MaterialModel> {
    if text.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
        return MaterialModel::preset(text);
    }
    let values: Result<Vec<f64>, _> = text.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).map(str::parse).collect();
    let values = values.map_err(|e| Error::InvalidMaterial(format!("`{text}`: {e}")))?;
    MaterialModel::from_row_major(&values)
}

/// Mesh for a domain name at `level`, or a mesh file refined `level` times.
fn load_mesh(domain: &str, level: i32) -> teig_core::Result<Mesh> {
    match DomainSpec::from_name(domain) {
        Ok(spec) => generate(&spec, level),
        Err(_) if Path::new(domain).exists() => {
            let (mut mesh, report) = read_mesh(domain)?;
            if report.reoriented_cells > 0 {
                log::warn!("{domain}: reoriented {} cells", report.reoriented_cells);
            }
            if level < 0 {
                return Err(Error::InvalidMesh("a mesh file cannot be coarsened".into()));
            }
            for _ in 0..level {
                mesh = refine(&mesh)?;
            }
            Ok(mesh)
        }
        Err(e) => Err(e),
    }
}

fn parse_levels(text: &str) -> anyhow::Result<std::ops::RangeInclusive<i32>> {
    let (a, b) = text.split_once("..").with_context(|| format!("levels `{text}` are not of the form a..b"))?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let (a, b): (i32, i32) = (a.trim().parse()?, b.trim().parse()?);
    anyhow::ensure!(a <= b, "empty level range {a}..{b}");
    Ok(a..=b)
}

fn print_report(r: &ConvergenceReport) {
    println!("# domain={} material={} bound={} tol={:e} krylov_dim={} shift_factor={}",
        r.domain, r.material, r.bound, r.solver.tol, r.solver.krylov_dim, r.solver.shift_factor);
    println!("{:>5} {:>10} {:>9} {:>9} {:>12} {:>10}  k", "level", "h", "dof_full", "dof_red", "shift", "wall_ms");
    for l in &r.levels {
        let ks: Vec<String> = l.eigenvalues.iter().map(|e| e.k.map_or("-".into(), |k| format!("{k:.6}"))).collect();
        let shift = l.shift.map_or("-".into(), |s| format!("{s:.6}"));
        println!("{:>5} {:>10.6} {:>9} {:>9} {:>12} {:>10.1}  {}", l.level, l.h, l.dof_full, l.dof_reduced, shift, l.wall_ms, ks.join(" "));
        if let Some(e) = &l.error {
            println!("      error: {e}");
        }
    }
    for i in 0..r.count() {
        let rates: Vec<String> = r.rates(i).iter().flatten().map(|x| format!("{x:.3}")).collect();
        if !rates.is_empty() {
            println!("rate lambda{}: {}", i + 1, rates.join(" "));
        }
        if r.levels.len() >= 3 {
            if let Some(l) = r.richardson(i) {
                println!("extrapolated k{}: {:.6}", i + 1, l.sqrt());
            }
        }
        if !r.is_monotone(i) {
            println!("lambda{} is not monotone under refinement", i + 1);
        }
    }
}

fn write_outputs(r: &ConvergenceReport, out: &OutputArgs) -> anyhow::Result<()> {
    if let Some(p) = &out.csv {
        harness::emit_csv(r, p).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &out.plot {
        harness::emit_plotdata(r, p).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &out.json {
        harness::emit_json(r, p).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn solve(problem: &Problem, level: i32, solver: &SolverArgs, csv: Option<&Path>, export: Option<&Path>) -> anyhow::Result<Outcome> {
    let material = parse_material(&problem.material)?;
    let mesh = load_mesh(&problem.domain, level)?;
    let mut cfg = solver.config();
    cfg.validate()?;
    let start = std::time::Instant::now();
    let kappa1 = eigen::dirichlet_eigenvalue(&mesh)?;
    cfg.shift = Some(cfg.shift.unwrap_or_else(|| eigen::shift_from_dirichlet(kappa1, &material)));
    let rp = ReducedPencil::assemble(&mesh, &material)?;
    if let Some(prefix) = export {
        let name = |s: &str| PathBuf::from(format!("{}_{s}.mtx", prefix.display()));
        rp.k.write_matrix_market(name("K"))?;
        rp.m.write_matrix_market(name("M"))?;
    }
    let sol = eigen::shift_invert_eigs(&rp, &cfg)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    println!("# mesh: {} vertices, {} cells; dof_full={} dof_reduced={}", mesh.n_vertices(), mesh.n_cells(), rp.dofs.n_full(), rp.n());
    println!("# kappa1={kappa1} bound={} shift={} tol={:e} krylov_dim={} restarts={} factor_nnz={}",
        material.eigenvalue_bound(), sol.shift, sol.tol, sol.krylov_dim, sol.restarts, sol.factor_nnz);
    println!("{:>3} {:>24} {:>12} {:>10}", "i", "lambda", "k", "residual");
    let real = sol.smallest_real();
    for (i, p) in real.iter().enumerate() {
        println!("{:>3} {:>24.12} {:>12.6} {:>10.2e}", i + 1, p.lambda.re, p.k.unwrap_or(f64::NAN), p.residual);
    }
    let complex: Vec<String> = sol.complex().filter(|p| p.lambda.im > 0.0).map(|p| format!("{:.4}", p.lambda)).collect();
    if !complex.is_empty() {
        println!("# complex (upper half plane): {}", complex.join(", "));
    }
    if let Some(path) = csv {
        let report = ConvergenceReport {
            domain: problem.domain.clone(),
            material: harness::material_label(&material),
            bound: material.eigenvalue_bound(),
            solver: harness::SolverMetadata::from_config(&cfg),
            levels: vec![harness::LevelResult {
                level,
                h: DomainSpec::mesh_size(level),
                dof_full: rp.dofs.n_full(),
                dof_reduced: rp.n(),
                n_t: rp.dofs.n_t(),
                kappa1: Some(kappa1),
                shift: Some(sol.shift),
                eigenvalues: real
                    .iter()
                    .map(|p| harness::Eigenvalue { lambda_re: p.lambda.re, lambda_im: p.lambda.im, k: p.k, residual: p.residual })
                    .collect(),
                wall_ms,
                factor_nnz: sol.factor_nnz,
                restarts: sol.restarts,
                converged: sol.is_complete(),
                error: None,
            }],
        };
        harness::emit_csv(&report, path)?;
    }
    Ok(if sol.is_complete() { Outcome::Done } else { Outcome::NotConverged })
}

fn verify_deflation(problem: &Problem, level: i32) -> anyhow::Result<Outcome> {
    let material = parse_material(&problem.material)?;
    let mesh = load_mesh(&problem.domain, level)?;
    let bp = BlockPencil::assemble(&mesh, &material)?;
    let rp = ReducedPencil::assemble(&mesh, &material)?;
    let schur = deflation::schur_blocks(&bp, &material)?;
    let scale = rp.blocks.k_hat.max_abs();
    println!("direct vs Schur complement (relative max): K {:.2e} F {:.2e} G {:.2e}",
        rp.blocks.k_hat.max_abs_diff(&schur.k_hat)? / scale,
        rp.blocks.f_hat.max_abs_diff(&schur.f_hat)? / scale,
        rp.blocks.g_hat.max_abs_diff(&schur.g_hat)? / scale);
    let c = deflation::congruence_check(&bp, &rp, &material)?;
    println!("congruence (relative max): K {:.2e} M {:.2e}", c.stiffness_error / c.stiffness_scale, c.mass_error / c.mass_scale);
    let s = deflation::verify_spectrum_relation(&bp, &rp, eigen::ORACLE_LIMIT)?;
    println!("full pencil: n={} finite={} infinite={}", s.n_full, s.finite_full.len(), s.infinite_full);
    println!("reduced pencil: n={} finite={} infinite={}", s.n_reduced, s.finite_reduced.len(), s.infinite_reduced);
    println!("infinite eigenvalues removed: {} (n_t = {})", s.infinite_removed(), s.n_t);
    println!("largest relative mismatch of finite eigenvalues: {:.2e}", s.max_relative_mismatch);
    Ok(Outcome::Done)
}

fn run_preset(name: &str, max_level: Option<i32>, solver: &SolverArgs, out_dir: Option<&Path>) -> anyhow::Result<Outcome> {
    let preset = Preset::by_name(name)?;
    let reports = harness::run_preset(name, max_level, &solver.config())?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut outcome = Outcome::Done;
    for r in &reports {
        print_report(r);
        println!();
        if let Some(dir) = out_dir {
            let stem = dir.join(format!("{}_{}", preset.name, r.material));
            let out = OutputArgs {
                csv: Some(stem.with_extension("csv")),
                plot: Some(stem.with_extension("plot.csv")),
                json: Some(stem.with_extension("json")),
            };
            write_outputs(r, &out)?;
        }
        if !r.all_converged() {
            outcome = Outcome::NotConverged;
        }
    }
    Ok(outcome)
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Solve { problem, level, solver, csv, export } => solve(&problem, level, &solver, csv.as_deref(), export.as_deref()),
        Command::Converge { problem, levels, solver, output, parallel } => {
            let material = parse_material(&problem.material)?;
            let domain = DomainSpec::from_name(&problem.domain)?;
            let report = harness::run_convergence(&domain, &material, parse_levels(&levels)?, &solver.config(), parallel)?;
            print_report(&report);
            write_outputs(&report, &output)?;
            Ok(if report.all_converged() { Outcome::Done } else { Outcome::NotConverged })
        }
        Command::VerifyDeflation { problem, level } => verify_deflation(&problem, level),
        Command::Dirichlet { domain, level } => {
            let mesh = load_mesh(&domain, level)?;
            let k1 = eigen::dirichlet_eigenvalue(&mesh)?;
            println!("kappa1 = {k1:.12}  (h = {}, {} vertices)", DomainSpec::mesh_size(level), mesh.n_vertices());
            Ok(Outcome::Done)
        }
        Command::Preset { name, max_level, solver, out_dir } => run_preset(&name, max_level, &solver, out_dir.as_deref()),
    }
}

/// Exit code for a failed run.
fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<Error>() {
        return match e {
            Error::SingularShift { .. } | Error::SingularMatrix { .. } | Error::DenseNoConvergence { .. } => EXIT_NONCONVERGENCE,
            Error::Io(_) => 1,
            _ => EXIT_INVALID,
        };
    }
    if err.downcast_ref::<std::num::ParseIntError>().is_some() {
        return EXIT_INVALID;
    }
    if err.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some()) {
        1
    } else {
        EXIT_INVALID
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INVALID) } else { ExitCode::SUCCESS };
        }
    };
    let filter = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(filter)).init();
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => {
            eprintln!("teig: not all requested eigenvalues converged");
            ExitCode::from(EXIT_NONCONVERGENCE)
        }
        Err(e) => {
            eprintln!("teig: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
