//! Smallest real transmission eigenvalues by shift-invert Krylov-Schur.
//!
//! The reduced pencil is indefinite with a singular `M_hat`, so the iteration
//! runs on the non-symmetric operator `(K_hat - sigma M_hat)^-1 M_hat`; Ritz
//! values `theta` map back to `lambda = sigma + 1 / theta`. The shift defaults
//! to just below the Dirichlet lower bound, which places every real
//! transmission eigenvalue above it.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::assembly::assemble_dirichlet_laplacian;
use crate::deflation::ReducedPencil;
use crate::error::{Error, Result};
use crate::material::MaterialModel;
use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;

pub mod dense;
pub mod krylov;
pub mod lu;
pub mod ordering;

use krylov::{krylov_schur, KrylovOptions, Operator};
use lu::SparseLu;

/// Largest pencil handed to the dense oracle.
pub const ORACLE_LIMIT: usize = 2000;

/// Fraction of the Dirichlet lower bound used as the default shift.
pub const SHIFT_FACTOR: f64 = 0.99;

/// Ritz values below this fraction of the largest are infinite eigenvalues
/// leaking through the kernel of `M_hat`.
const THETA_FLOOR: f64 = 1e-12;

const MAX_SHIFT_RETRIES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftInvertConfig {
    /// `None` selects [`default_shift`].
    pub shift: Option<f64>,
    /// basis size; `None` gives `3 * count + 20`
    pub krylov_dim: Option<usize>,
    pub count: usize,
    pub tol: f64,
    pub max_restarts: usize,
    /// relative bound on `|Im lambda|` for the real view
    pub imag_threshold: f64,
    pub seed: u64,
}

impl Default for ShiftInvertConfig {
    fn default() -> Self {
        ShiftInvertConfig {
            shift: None,
            krylov_dim: None,
            count: 6,
            tol: 1e-10,
            max_restarts: 50,
            imag_threshold: 1e-8,
            seed: 0x5eed,
        }
    }
}

impl ShiftInvertConfig {
    pub fn with_count(count: usize) -> Self {
        ShiftInvertConfig { count, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidConfig("count must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidConfig(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if let Some(m) = self.krylov_dim {
            if m <= self.count {
                return Err(Error::InvalidConfig(format!("krylov dimension {m} must exceed count {}", self.count)));
            }
        }
        if let Some(s) = self.shift {
            if !s.is_finite() {
                return Err(Error::InvalidConfig(format!("shift must be finite, got {s}")));
            }
        }
        if !(self.imag_threshold >= 0.0) {
            return Err(Error::InvalidConfig("imag_threshold must be non-negative".into()));
        }
        Ok(())
    }

    /// Basis size when `nev` Ritz values are wanted.
    pub fn krylov_dim_for(&self, nev: usize) -> usize {
        let base = self.krylov_dim.unwrap_or(3 * self.count + 20);
        base + 3 * nev.saturating_sub(self.count)
    }
}

/// The order `c1 <= c2`: by modulus, then by decreasing argument in
/// `[0, 2 pi)`.
pub fn eqslantless_cmp(c1: Complex64, c2: Complex64) -> Ordering {
    let (mut r1, mut r2) = (c1.norm_sqr(), c2.norm_sqr());
    if !r1.is_finite() || !r2.is_finite() {
        (r1, r2) = (c1.norm(), c2.norm());
    }
    match r1.total_cmp(&r2) {
        Ordering::Equal if r1 == 0.0 => Ordering::Equal,
        Ordering::Equal => arg(c2).total_cmp(&arg(c1)),
        o => o,
    }
}

/// `c1 <= c2` in the modulus-then-argument order.
pub fn eqslantless(c1: Complex64, c2: Complex64) -> bool {
    eqslantless_cmp(c1, c2) != Ordering::Greater
}

fn arg(c: Complex64) -> f64 {
    let a = c.im.atan2(c.re);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: Complex64,
    /// `sqrt(lambda)` for real positive `lambda`
    pub k: Option<f64>,
    /// `|K x - lambda M x| / ((|K|_1 + |lambda| |M|_1) |x|)`
    pub residual: f64,
    pub converged: bool,
    pub vector: Vec<Complex64>,
}

impl EigenPair {
    pub fn is_real(&self, imag_threshold: f64) -> bool {
        self.lambda.im.abs() <= imag_threshold * self.lambda.norm() && self.lambda.re > 0.0
    }
}

#[derive(Debug, Clone)]
pub struct EigenSolution {
    /// finite pairs nearest the shift, in the modulus-then-argument order
    pub pairs: Vec<EigenPair>,
    /// shift actually factorized (after any perturbation)
    pub shift: f64,
    pub requested_shift: f64,
    pub count: usize,
    pub tol: f64,
    pub krylov_dim: usize,
    pub imag_threshold: f64,
    pub restarts: usize,
    pub factor_nnz: usize,
    /// every returned pair met the tolerance
    pub converged: bool,
}

impl EigenSolution {
    /// Real positive eigenvalues, ascending; conjugate duplicates dropped.
    pub fn real(&self) -> Vec<&EigenPair> {
        self.pairs
            .iter()
            .filter(|p| p.is_real(self.imag_threshold))
            .filter(|p| p.lambda.im >= 0.0 || p.lambda.im.abs() <= 1e-12 * p.lambda.norm())
            .collect()
    }

    /// The first `count` real converged eigenvalues.
    pub fn smallest_real(&self) -> Vec<&EigenPair> {
        self.real().into_iter().filter(|p| p.converged).take(self.count).collect()
    }

    /// Whether `count` converged real eigenvalues were found.
    pub fn is_complete(&self) -> bool {
        self.smallest_real().len() >= self.count
    }

    pub fn complex(&self) -> impl Iterator<Item = &EigenPair> {
        self.pairs.iter().filter(|p| !p.is_real(self.imag_threshold))
    }
}

struct ShiftInvert<'a> {
    lu: &'a SparseLu,
    m: &'a CsrMatrix,
}

fn complex_matvec(a: &CsrMatrix, x: &[Complex64]) -> Vec<Complex64> {
    let re: Vec<f64> = x.iter().map(|z| z.re).collect();
    let im: Vec<f64> = x.iter().map(|z| z.im).collect();
    let yr = a.matvec(&re);
    if im.iter().all(|&v| v == 0.0) {
        return yr.into_iter().map(|r| Complex64::new(r, 0.0)).collect();
    }
    let yi = a.matvec(&im);
    yr.into_iter().zip(yi).map(|(r, i)| Complex64::new(r, i)).collect()
}

impl Operator for ShiftInvert<'_> {
    fn dim(&self) -> usize {
        self.lu.n()
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.lu.solve_complex(&complex_matvec(self.m, x))
    }
}

/// Factorizes `K - sigma M`, moving `sigma` down by `1e-3 |sigma|` when it
/// is numerically singular.
pub fn factorize_shifted(k: &CsrMatrix, m: &CsrMatrix, sigma: f64) -> Result<(SparseLu, f64)> {
    let step = 1e-3 * if sigma == 0.0 { 1.0 } else { sigma.abs() };
    let mut s = sigma;
    for attempt in 0..=MAX_SHIFT_RETRIES {
        let a = k.add_scaled(1.0, m, -s)?;
        match SparseLu::factorize(&a) {
            Ok(lu) => return Ok((lu, s)),
            Err(Error::SingularMatrix { column }) => {
                log::warn!("K - {s} M is singular at column {column}; perturbing the shift");
                if attempt == MAX_SHIFT_RETRIES {
                    break;
                }
                s -= step;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::SingularShift { shift: sigma, attempts: MAX_SHIFT_RETRIES })
}

/// Relative residual of `(lambda, x)` against the pencil `(K, M)`.
pub fn relative_residual(k: &CsrMatrix, m: &CsrMatrix, norms: (f64, f64), lambda: Complex64, x: &[Complex64]) -> f64 {
    let kx = complex_matvec(k, x);
    let mx = complex_matvec(m, x);
    let r: f64 = kx.iter().zip(&mx).map(|(a, b)| (a - lambda * b).norm_sqr()).sum::<f64>().sqrt();
    let xn: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    r / ((norms.0 + lambda.norm() * norms.1) * xn)
}

struct Run {
    pairs: Vec<EigenPair>,
    restarts: usize,
}

/// One Krylov-Schur run for `nev` eigenvalues of `(K, M)` nearest the
/// factorized shift.
fn run_near(
    k: &CsrMatrix,
    m: &CsrMatrix,
    lu: &SparseLu,
    sigma: f64,
    nev: usize,
    cfg: &ShiftInvertConfig,
) -> Result<Run> {
    let op = ShiftInvert { lu, m };
    let opts = KrylovOptions {
        nev,
        ncv: cfg.krylov_dim_for(nev),
        keep: 2 * nev,
        tol: cfg.tol / 10.0,
        max_restarts: cfg.max_restarts,
        seed: cfg.seed,
        warmup: 2,
    };
    let res = krylov_schur(&op, &opts)?;
    let norms = (k.norm1(), m.norm1());
    let theta_max = res.pairs.iter().map(|p| p.theta.norm()).fold(0.0, f64::max);
    // same rule as the dense oracle, against the natural size of the pencil;
    // catches meshes whose finite spectrum is empty
    let lambda_max = dense::INFINITY_RATIO * sigma.abs().max(norms.0 / norms.1);
    let mut pairs = Vec::with_capacity(res.pairs.len());
    for p in res.pairs {
        if p.theta.norm() <= THETA_FLOOR * theta_max {
            continue;
        }
        let lambda = sigma + 1.0 / p.theta;
        if !(lambda.norm() <= lambda_max) {
            continue;
        }
        let residual = relative_residual(k, m, norms, lambda, &p.vector);
        pairs.push(EigenPair { lambda, k: None, residual, converged: residual <= cfg.tol, vector: p.vector });
    }
    Ok(Run { pairs, restarts: res.restarts })
}

fn finish(mut pairs: Vec<EigenPair>, cfg: &ShiftInvertConfig) -> Vec<EigenPair> {
    for p in &mut pairs {
        if p.is_real(cfg.imag_threshold) {
            p.k = Some(p.lambda.re.sqrt());
        }
    }
    pairs.sort_by(|a, b| eqslantless_cmp(a.lambda, b.lambda));
    pairs
}

/// Eigenvalues of `(K, M)` nearest `sigma`, widening the Krylov window until
/// `cfg.count` real positive ones have converged or the window is exhausted.
pub fn eigs_near(k: &CsrMatrix, m: &CsrMatrix, sigma: f64, cfg: &ShiftInvertConfig) -> Result<EigenSolution> {
    cfg.validate()?;
    if k.shape() != m.shape() || k.nrows() != k.ncols() {
        return Err(Error::DimensionMismatch(format!("pencil of {:?} and {:?}", k.shape(), m.shape())));
    }
    let n = k.nrows();
    let (lu, shift) = factorize_shifted(k, m, sigma)?;
    let mut nev = cfg.count;
    let mut restarts = 0;
    loop {
        let run = run_near(k, m, &lu, shift, nev, cfg)?;
        restarts += run.restarts;
        let real = run.pairs.iter().filter(|p| p.converged && p.is_real(cfg.imag_threshold) && p.lambda.im >= 0.0).count();
        // fewer finite pairs than asked for means the finite spectrum is exhausted
        let widest = run.pairs.len() < nev || nev + 1 >= n || nev >= 32 * cfg.count + 64;
        if real >= cfg.count || widest {
            if real < cfg.count {
                log::warn!("only {real} of {} real eigenvalues found near shift {shift}", cfg.count);
            }
            let pairs = finish(run.pairs, cfg);
            let converged = pairs.iter().all(|p| p.converged);
            return Ok(EigenSolution {
                pairs,
                shift,
                requested_shift: sigma,
                count: cfg.count,
                tol: cfg.tol,
                krylov_dim: cfg.krylov_dim_for(nev),
                imag_threshold: cfg.imag_threshold,
                restarts,
                factor_nnz: lu.nnz(),
                converged,
            });
        }
        log::debug!("{real} real eigenvalues among {nev} nearest {shift}; widening");
        nev *= 2;
    }
}

/// Shift-invert solve of the reduced pencil. The shift must be set; see
/// [`solve`] for the default.
pub fn shift_invert_eigs(rp: &ReducedPencil, cfg: &ShiftInvertConfig) -> Result<EigenSolution> {
    let sigma = cfg.shift.ok_or_else(|| Error::InvalidConfig("no shift given; use default_shift".into()))?;
    eigs_near(&rp.k, &rp.m, sigma, cfg)
}

/// Assembles the reduced pencil and solves it, taking the default shift
/// when none is configured.
pub fn solve(mesh: &Mesh, material: &MaterialModel, cfg: &ShiftInvertConfig) -> Result<(ReducedPencil, EigenSolution)> {
    cfg.validate()?;
    let rp = ReducedPencil::assemble(mesh, material)?;
    let shift = match cfg.shift {
        Some(s) => s,
        None => default_shift(mesh, material)?,
    };
    let sol = shift_invert_eigs(&rp, &ShiftInvertConfig { shift: Some(shift), ..cfg.clone() })?;
    Ok((rp, sol))
}

/// First Dirichlet eigenvalue of the P1 Laplacian on `mesh`.
pub fn dirichlet_eigenvalue(mesh: &Mesh) -> Result<f64> {
    let (k, x) = assemble_dirichlet_laplacian(mesh)?;
    if k.nrows() == 0 {
        return Err(Error::EmptyInterior);
    }
    let cfg = ShiftInvertConfig { count: 1, tol: 1e-12, ..Default::default() };
    let sol = eigs_near(&k, &x, 0.0, &cfg)?;
    sol.real()
        .first()
        .map(|p| p.lambda.re)
        .ok_or_else(|| Error::InvalidConfig("Dirichlet eigensolve returned no real eigenvalue".into()))
}

/// `0.99 kappa_1 b`, with `b` the material's lower bound factor.
pub fn shift_from_dirichlet(kappa1: f64, material: &MaterialModel) -> f64 {
    SHIFT_FACTOR * kappa1 * material.eigenvalue_bound()
}

pub fn default_shift(mesh: &Mesh, material: &MaterialModel) -> Result<f64> {
    Ok(shift_from_dirichlet(dirichlet_eigenvalue(mesh)?, material))
}

/// Full spectrum of a small pencil.
pub fn dense_oracle(k: &CsrMatrix, m: &CsrMatrix) -> Result<Vec<dense::DenseEigenvalue>> {
    if k.nrows() > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge { size: k.nrows(), limit: ORACLE_LIMIT });
    }
    dense::pencil_eigenvalues(&k.to_dense(), &m.to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, DomainSpec};
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn square(level: i32) -> Mesh {
        generate(&DomainSpec::from_name("square").unwrap(), level).unwrap()
    }

    #[test]
    fn order_examples() {
        assert!(eqslantless(c(0.0, 0.0), c(0.0, 0.0)));
        assert!(eqslantless(c(1.0, 1.0), c(2.0, 0.0)));
        assert!(!eqslantless(c(2.0, 0.0), c(1.0, 1.0)));
        assert!(eqslantless(c(0.0, 1.0), c(1.0, 0.0)));
        assert!(!eqslantless(c(1.0, 0.0), c(0.0, 1.0)));
        // the lower half plane has the larger argument
        assert!(eqslantless(c(1.0, -1.0), c(1.0, 1.0)));
        assert!(eqslantless(c(-1.0, 0.0), c(0.0, 1.0)));
    }

    #[test]
    fn order_is_transitive_on_a_lattice() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut draw = || c(rng.random_range(-2..=2) as f64, rng.random_range(-2..=2) as f64);
        for _ in 0..20_000 {
            let (a, b, d) = (draw(), draw(), draw());
            assert!(eqslantless(a, b) || eqslantless(b, a));
            if eqslantless(a, b) && eqslantless(b, d) {
                assert!(eqslantless(a, d), "{a} {b} {d}");
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(ShiftInvertConfig::default().validate().is_ok());
        assert!(ShiftInvertConfig { count: 0, ..Default::default() }.validate().is_err());
        assert!(ShiftInvertConfig { tol: 1.0, ..Default::default() }.validate().is_err());
        assert!(ShiftInvertConfig { krylov_dim: Some(6), ..Default::default() }.validate().is_err());
        assert_eq!(ShiftInvertConfig::with_count(6).krylov_dim_for(6), 38);
    }

    #[test]
    fn oracle_small_pencils() {
        let i = CsrMatrix::identity(3);
        for v in dense_oracle(&i, &i).unwrap() {
            assert!((v.value().unwrap() - c(1.0, 0.0)).norm() < 1e-14);
        }
        let (_, inf) = dense::split_finite(
            &dense_oracle(&CsrMatrix::from_diagonal(&[1.0, 2.0]), &CsrMatrix::from_diagonal(&[1.0, 0.0])).unwrap(),
            dense::INFINITY_RATIO,
        );
        assert_eq!(inf, 1);
    }

    #[test]
    fn shifted_factorization_residual() {
        let mesh = square(1);
        let rp = ReducedPencil::assemble(&mesh, &MaterialModel::preset("A1").unwrap()).unwrap();
        let (lu, s) = factorize_shifted(&rp.k, &rp.m, 4.93).unwrap();
        assert_eq!(s, 4.93);
        let a = rp.k.add_scaled(1.0, &rp.m, -s).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let b: Vec<f64> = (0..a.nrows()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = lu.solve(&b);
        let ax = a.matvec(&x);
        let r: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(r / bn <= 1e-10, "{}", r / bn);
    }

    #[test]
    fn krylov_matches_oracle_on_coarse_square() {
        let mesh = square(-1);
        let mat = MaterialModel::preset("A1").unwrap();
        let (rp, sol) = solve(&mesh, &mat, &ShiftInvertConfig::with_count(2)).unwrap();
        let (finite, _) = dense::split_finite(&dense_oracle(&rp.k, &rp.m).unwrap(), dense::INFINITY_RATIO);
        assert!(!sol.pairs.is_empty());
        for p in sol.pairs.iter().filter(|p| p.converged) {
            let best = finite.iter().map(|z| (z - p.lambda).norm() / z.norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-8, "{} off by {best}", p.lambda);
            assert!(p.residual <= 1e-10);
        }
        let smallest_real = finite
            .iter()
            .filter(|z| z.im.abs() <= 1e-8 * z.norm() && z.re > 0.0)
            .map(|z| z.re)
            .fold(f64::INFINITY, f64::min);
        let got = sol.real()[0].lambda.re;
        assert!((got - smallest_real).abs() < 1e-8 * smallest_real, "{got} vs {smallest_real}");
    }

    #[test]
    fn shift_invariance() {
        let mesh = square(0);
        let mat = MaterialModel::preset("A1").unwrap();
        let rp = ReducedPencil::assemble(&mesh, &mat).unwrap();
        let sigma = default_shift(&mesh, &mat).unwrap();
        let first = |s: f64| {
            let cfg = ShiftInvertConfig { shift: Some(s), count: 1, ..Default::default() };
            shift_invert_eigs(&rp, &cfg).unwrap().smallest_real()[0].lambda.re
        };
        let (a, b) = (first(sigma), first(0.5 * sigma));
        assert!((a - b).abs() <= 1e-8 * a, "{a} vs {b}");
    }

    #[test]
    fn dirichlet_on_square() {
        let k1 = dirichlet_eigenvalue(&square(1)).unwrap();
        let exact = 2.0 * std::f64::consts::PI.powi(2);
        assert!(k1 > exact && (k1 - exact) / exact < 0.05, "{k1}");
    }

    #[test]
    fn default_shift_for_scalar_material() {
        let m = MaterialModel::new(crate::material::Mat::identity(2, 2) * 0.25).unwrap();
        assert!((shift_from_dirichlet(10.0, &m) - 0.99 * 10.0 * 0.25).abs() < 1e-15);
    }
}
