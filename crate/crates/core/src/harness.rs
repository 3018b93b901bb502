//! Mesh-sequence experiments: solves over refinement levels, convergence
//! rates, benchmark presets and their CSV / plot-data output.

use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::assembly::DofMap;
use crate::deflation::ReducedPencil;
use crate::eigen::{self, ShiftInvertConfig};
use crate::error::{Error, Result};
use crate::material::{self, MaterialModel};
use crate::mesh::{generate, DomainSpec};

/// Relative slack for the monotone-decrease check.
pub const MONOTONE_SLACK: f64 = 1e-8;

pub const CSV_HEADER: &str = "level,h,dof_full,dof_reduced,i,lambda_re,lambda_im,k,residual,rate,wall_ms";

#[derive(Debug, Clone, Serialize)]
pub struct Eigenvalue {
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub k: Option<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelResult {
    pub level: i32,
    pub h: f64,
    pub dof_full: usize,
    pub dof_reduced: usize,
    pub n_t: usize,
    /// first Dirichlet eigenvalue on this mesh
    pub kappa1: Option<f64>,
    pub shift: Option<f64>,
    /// smallest real eigenvalues, ascending
    pub eigenvalues: Vec<Eigenvalue>,
    pub wall_ms: f64,
    pub factor_nnz: usize,
    pub restarts: usize,
    pub converged: bool,
    pub error: Option<String>,
}

impl LevelResult {
    pub fn lambda(&self, i: usize) -> Option<f64> {
        self.eigenvalues.get(i).map(|e| e.lambda_re)
    }
}

/// Solver settings recorded with every report.
#[derive(Debug, Clone, Serialize)]
pub struct SolverMetadata {
    pub count: usize,
    pub shift: Option<f64>,
    pub shift_factor: f64,
    pub krylov_dim: usize,
    pub tol: f64,
    pub max_restarts: usize,
    pub imag_threshold: f64,
    pub seed: u64,
}

impl SolverMetadata {
    pub fn from_config(cfg: &ShiftInvertConfig) -> Self {
        SolverMetadata {
            count: cfg.count,
            shift: cfg.shift,
            shift_factor: eigen::SHIFT_FACTOR,
            krylov_dim: cfg.krylov_dim_for(cfg.count),
            tol: cfg.tol,
            max_restarts: cfg.max_restarts,
            imag_threshold: cfg.imag_threshold,
            seed: cfg.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub domain: String,
    pub material: String,
    pub bound: f64,
    pub solver: SolverMetadata,
    pub levels: Vec<LevelResult>,
}

/// `log2(|b - a| / |c - b|)` for three consecutive levels.
pub fn rate(a: f64, b: f64, c: f64) -> Option<f64> {
    let (d1, d2) = ((b - a).abs(), (c - b).abs());
    (d1 > 0.0 && d2 > 0.0).then(|| (d1 / d2).log2())
}

/// Aitken extrapolation of three consecutive values of a sequence that
/// converges geometrically.
pub fn richardson(a: f64, b: f64, c: f64) -> Option<f64> {
    let (d1, d2) = (b - a, c - b);
    let den = d2 - d1;
    (den != 0.0 && den.is_finite()).then(|| c - d2 * d2 / den)
}

impl ConvergenceReport {
    pub fn count(&self) -> usize {
        self.solver.count
    }

    /// Levels that produced at least `i + 1` eigenvalues, in order.
    fn series(&self, i: usize) -> Vec<(usize, f64)> {
        self.levels.iter().enumerate().filter_map(|(l, r)| r.lambda(i).map(|v| (l, v))).collect()
    }

    /// `rate_l` for eigenvalue `i` at each level (`None` where three
    /// consecutive levels are not available).
    pub fn rates(&self, i: usize) -> Vec<Option<f64>> {
        let mut out = vec![None; self.levels.len()];
        for l in 0..self.levels.len().saturating_sub(2) {
            let lam = |j: usize| self.levels[j].lambda(i);
            let consecutive = self.levels[l + 2].level - self.levels[l].level == 2;
            if let (true, Some(a), Some(b), Some(c)) = (consecutive, lam(l), lam(l + 1), lam(l + 2)) {
                out[l] = rate(a, b, c);
            }
        }
        out
    }

    /// Whether eigenvalue `i` never increases under refinement.
    pub fn is_monotone(&self, i: usize) -> bool {
        self.series(i).windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + MONOTONE_SLACK))
    }

    /// Extrapolated `lambda_i` from the last three levels.
    pub fn richardson(&self, i: usize) -> Option<f64> {
        let s = self.series(i);
        match s.as_slice() {
            [.., a, b, c] => richardson(a.1, b.1, c.1),
            _ => None,
        }
    }

    pub fn all_converged(&self) -> bool {
        self.levels.iter().all(|l| l.converged && l.error.is_none())
    }

    /// Real eigenvalues below `(1 - slack) kappa_1 bound`, as
    /// `(level, lambda, bound)`.
    pub fn bound_violations(&self, slack: f64) -> Vec<(i32, f64, f64)> {
        let mut out = Vec::new();
        for l in &self.levels {
            if let Some(k1) = l.kappa1 {
                let lower = k1 * self.bound * (1.0 - slack);
                for e in &l.eigenvalues {
                    if e.lambda_re < lower {
                        out.push((l.level, e.lambda_re, lower));
                    }
                }
            }
        }
        out
    }
}

/// Preset name for `material` if it is one, otherwise its entries.
pub fn material_label(material: &MaterialModel) -> String {
    for name in material::PRESET_NAMES {
        if material::preset_matrix(name).is_ok_and(|m| &m == material.a()) {
            return name.to_string();
        }
    }
    let a = material.a();
    let entries: Vec<String> = (0..a.nrows()).flat_map(|i| (0..a.ncols()).map(move |j| (i, j))).map(|(i, j)| format!("{}", a[(i, j)])).collect();
    format!("[{}]", entries.join(" "))
}

/// Solves one mesh level.
pub fn solve_level(domain: &DomainSpec, material: &MaterialModel, level: i32, cfg: &ShiftInvertConfig) -> LevelResult {
    let start = Instant::now();
    let mut out = LevelResult {
        level,
        h: DomainSpec::mesh_size(level),
        dof_full: 0,
        dof_reduced: 0,
        n_t: 0,
        kappa1: None,
        shift: None,
        eigenvalues: Vec::new(),
        wall_ms: 0.0,
        factor_nnz: 0,
        restarts: 0,
        converged: false,
        error: None,
    };
    let run = |out: &mut LevelResult| -> Result<()> {
        let mesh = generate(domain, level)?;
        let dofs = DofMap::new(&mesh)?;
        out.dof_full = dofs.n_full();
        out.dof_reduced = dofs.n_reduced();
        out.n_t = dofs.n_t();
        let kappa1 = eigen::dirichlet_eigenvalue(&mesh)?;
        out.kappa1 = Some(kappa1);
        let shift = cfg.shift.unwrap_or_else(|| eigen::shift_from_dirichlet(kappa1, material));
        let rp = ReducedPencil::assemble(&mesh, material)?;
        let sol = eigen::shift_invert_eigs(&rp, &ShiftInvertConfig { shift: Some(shift), ..cfg.clone() })?;
        out.shift = Some(sol.shift);
        out.factor_nnz = sol.factor_nnz;
        out.restarts = sol.restarts;
        out.eigenvalues = sol
            .smallest_real()
            .iter()
            .map(|p| Eigenvalue { lambda_re: p.lambda.re, lambda_im: p.lambda.im, k: p.k, residual: p.residual })
            .collect();
        out.converged = sol.is_complete();
        if !out.converged {
            log::warn!("level {level}: {} of {} real eigenvalues converged", out.eigenvalues.len(), cfg.count);
        }
        Ok(())
    };
    if let Err(e) = run(&mut out) {
        log::error!("level {level} failed: {e}");
        out.error = Some(e.to_string());
    }
    out.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    out
}

/// Solves the levels of `domain` in order, or concurrently with `parallel`.
/// Failing levels are recorded in the report.
pub fn run_convergence(
    domain: &DomainSpec,
    material: &MaterialModel,
    levels: RangeInclusive<i32>,
    cfg: &ShiftInvertConfig,
    parallel: bool,
) -> Result<ConvergenceReport> {
    cfg.validate()?;
    if domain.dim() != material.dim() {
        return Err(Error::DimensionMismatch(format!("{}D domain with a {}D material", domain.dim(), material.dim())));
    }
    if *levels.start() < domain.min_level() {
        return Err(Error::UnsupportedDomain(format!(
            "{} supports levels >= {}, got {}",
            domain.name(),
            domain.min_level(),
            levels.start()
        )));
    }
    let results: Vec<LevelResult> = if parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = levels.clone().map(|l| s.spawn(move || solve_level(domain, material, l, cfg))).collect();
            handles.into_iter().map(|h| h.join().expect("level solve panicked")).collect()
        })
    } else {
        levels
            .map(|l| {
                let r = solve_level(domain, material, l, cfg);
                log::info!("{} level {l}: {:?} in {:.0} ms", domain.name(), r.eigenvalues.first().map(|e| e.lambda_re), r.wall_ms);
                r
            })
            .collect()
    };
    Ok(ConvergenceReport {
        domain: domain.name().to_string(),
        material: material_label(material),
        bound: material.eigenvalue_bound(),
        solver: SolverMetadata::from_config(cfg),
        levels: results,
    })
}

/// The benchmark problems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    pub domain: &'static str,
    pub materials: &'static [&'static str],
    pub count: usize,
    pub levels: RangeInclusive<i32>,
}

pub const PRESETS: [Preset; 8] = [
    Preset { name: "ex1", domain: "disk", materials: &["A1"], count: 6, levels: 1..=4 },
    Preset { name: "ex2", domain: "square", materials: &["A1", "A2", "A3", "A4"], count: 1, levels: 1..=4 },
    Preset { name: "ex3", domain: "lshape", materials: &["A1", "A2", "A3", "A4"], count: 1, levels: 1..=4 },
    Preset { name: "ex4", domain: "annulus", materials: &["A1", "A2", "A3", "A4"], count: 1, levels: 1..=4 },
    Preset { name: "ex5", domain: "ball", materials: &["A5"], count: 6, levels: -1..=0 },
    Preset { name: "ex6", domain: "cube", materials: &["A6", "A7", "A8"], count: 6, levels: 0..=1 },
    Preset { name: "ex7", domain: "cube_cavity", materials: &["A6", "A7", "A8"], count: 6, levels: 0..=1 },
    Preset { name: "ex8", domain: "cube_cylinder_hole", materials: &["A6", "A7", "A8"], count: 6, levels: 0..=1 },
];

/// Deepest 3D level that runs without a warning.
pub const MAX_QUIET_3D_LEVEL: i32 = 1;

impl Preset {
    pub fn by_name(name: &str) -> Result<&'static Preset> {
        PRESETS.iter().find(|p| p.name.eq_ignore_ascii_case(name)).ok_or_else(|| Error::UnknownPreset(name.to_string()))
    }

    pub fn domain(&self) -> DomainSpec {
        DomainSpec::from_name(self.domain).expect("preset domains exist")
    }

    /// Default levels, capped at `max_level`.
    pub fn levels_up_to(&self, max_level: Option<i32>) -> RangeInclusive<i32> {
        let hi = max_level.unwrap_or(*self.levels.end());
        let lo = (*self.levels.start()).min(hi).max(self.domain().min_level());
        lo..=hi
    }
}

/// Runs every material of a preset. `cfg.count` is replaced by the
/// preset's count.
pub fn run_preset(name: &str, max_level: Option<i32>, cfg: &ShiftInvertConfig) -> Result<Vec<ConvergenceReport>> {
    let preset = Preset::by_name(name)?;
    let domain = preset.domain();
    let levels = preset.levels_up_to(max_level);
    if domain.dim() == 3 && *levels.end() > MAX_QUIET_3D_LEVEL {
        log::warn!("{}: 3D level {} needs a large factorization; expect heavy memory use", preset.name, levels.end());
    }
    let cfg = ShiftInvertConfig { count: preset.count, ..cfg.clone() };
    preset
        .materials
        .iter()
        .map(|m| run_convergence(&domain, &MaterialModel::preset(m)?, levels.clone(), &cfg, false))
        .collect()
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text of a report, one row per level and eigenvalue.
pub fn format_csv(report: &ConvergenceReport) -> String {
    let mut s = String::new();
    s.push_str(CSV_HEADER);
    s.push('\n');
    let rates: Vec<Vec<Option<f64>>> = (0..report.count()).map(|i| report.rates(i)).collect();
    for (l, lev) in report.levels.iter().enumerate() {
        for (i, e) in lev.eigenvalues.iter().enumerate() {
            let k = e.k.map(fmt17).unwrap_or_default();
            let r = rates.get(i).and_then(|r| r[l]).map(fmt17).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{:.3}",
                lev.level,
                fmt17(lev.h),
                lev.dof_full,
                lev.dof_reduced,
                i + 1,
                fmt17(e.lambda_re),
                fmt17(e.lambda_im),
                k,
                fmt17(e.residual),
                r,
                lev.wall_ms
            );
        }
    }
    s
}

pub fn emit_csv(report: &ConvergenceReport, path: impl AsRef<Path>) -> Result<()> {
    if report.levels.iter().all(|l| l.eigenvalues.is_empty()) {
        log::warn!("report for {} has no eigenvalues; writing the header only", report.domain);
    }
    std::fs::write(path, format_csv(report))?;
    Ok(())
}

/// Solver settings, per-level data and failures as JSON.
pub fn emit_json(report: &ConvergenceReport, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.into()))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// `(h_l, |lambda_{i,l+1} - lambda_{i,l}|)` for eigenvalue `i`.
pub fn differences(report: &ConvergenceReport, i: usize) -> Vec<(f64, f64)> {
    report
        .levels
        .windows(2)
        .filter(|w| w[1].level == w[0].level + 1)
        .filter_map(|w| Some((w[0].h, (w[1].lambda(i)? - w[0].lambda(i)?).abs())))
        .collect()
}

/// Least-squares slope of `log diff` against `log h`.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.1 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Plot data: `series,h,value` rows with one series per eigenvalue index
/// and a slope-2 reference through the first difference of eigenvalue 1.
pub fn format_plotdata(report: &ConvergenceReport) -> String {
    let mut s = String::from("series,h,value\n");
    for i in 0..report.count() {
        for (h, d) in differences(report, i) {
            let _ = writeln!(s, "lambda{},{},{}", i + 1, fmt17(h), fmt17(d));
        }
    }
    let first = differences(report, 0);
    if let Some(&(h0, d0)) = first.first() {
        for &(h, _) in &first {
            let _ = writeln!(s, "slope2,{},{}", fmt17(h), fmt17(d0 * (h / h0).powi(2)));
        }
    }
    s
}

pub fn emit_plotdata(report: &ConvergenceReport, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_plotdata(report))?;
    Ok(())
}
