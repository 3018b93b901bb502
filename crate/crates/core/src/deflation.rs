//! Elimination of the piecewise-constant block.
//!
//! With `W` the block elimination built from `M_P^-1`, `W K W^T` splits into
//! the reduced stiffness and `M_P`, and `W M W^T` into the reduced mass and a
//! zero block. The reduced pencil therefore keeps every finite eigenvalue and
//! drops exactly `n_t` infinite ones.

use num_complex::Complex64;

use crate::assembly::{self, AssemblyOptions, BlockPencil, Discretization, DofMap, ReducedBlocks, BlockSet};
use crate::eigen::dense;
use crate::error::{Error, Result};
use crate::material::{invert, MaterialModel};
use crate::mesh::Mesh;
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Block offsets of the reduced pencil: interior P1, all-vertex P1, the two
/// multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReducedLayout {
    pub omega: usize,
    pub gamma: usize,
    pub sigma: usize,
    pub varsigma: usize,
    pub n: usize,
}

impl ReducedLayout {
    pub fn new(dofs: &DofMap) -> Self {
        let gamma = dofs.n_e0();
        let sigma = gamma + dofs.n_e();
        ReducedLayout { omega: 0, gamma, sigma, varsigma: sigma + 1, n: sigma + 2 }
    }
}

/// `K_hat z = lambda M_hat z`.
#[derive(Debug, Clone)]
pub struct ReducedPencil {
    pub dofs: DofMap,
    pub layout: ReducedLayout,
    pub blocks: ReducedBlocks,
    pub k: CsrMatrix,
    pub m: CsrMatrix,
}

impl ReducedPencil {
    /// Direct assembly from the reduced weights; no matrix products.
    pub fn assemble(mesh: &Mesh, material: &MaterialModel) -> Result<Self> {
        Self::assemble_with(mesh, material, AssemblyOptions::default())
    }

    pub fn assemble_with(mesh: &Mesh, material: &MaterialModel, opts: AssemblyOptions) -> Result<Self> {
        if mesh.dim() != material.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}D mesh with a {}x{} material",
                mesh.dim(),
                material.dim(),
                material.dim()
            )));
        }
        let disc = Discretization::new(mesh)?;
        let blocks = assembly::reduced_from(&disc, material)?;
        let x = disc.mass(assembly::Space::Interior, assembly::Space::Interior);
        let y = disc.mass(assembly::Space::Interior, assembly::Space::All);
        let mut alpha = disc.load(assembly::Space::Interior);
        let mut beta = disc.load(assembly::Space::All);
        if opts.equilibrate_multipliers {
            for v in [&mut alpha, &mut beta] {
                let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                v.iter_mut().for_each(|x| *x /= m);
            }
        }
        Ok(Self::from_blocks(disc.dofs, blocks, &x, &y, &alpha, &beta))
    }

    pub fn from_blocks(
        dofs: DofMap,
        blocks: ReducedBlocks,
        x: &CsrMatrix,
        y: &CsrMatrix,
        alpha: &[f64],
        beta: &[f64],
    ) -> Self {
        let l = ReducedLayout::new(&dofs);
        let mut k = TripletBuilder::with_capacity(
            l.n,
            l.n,
            blocks.k_hat.nnz() + 2 * blocks.f_hat.nnz() + blocks.g_hat.nnz() + 2 * (alpha.len() + beta.len()),
        );
        k.push_block(l.omega, l.omega, &blocks.k_hat);
        k.push_block(l.omega, l.gamma, &blocks.f_hat);
        k.push_block_transposed(l.gamma, l.omega, &blocks.f_hat);
        k.push_block(l.gamma, l.gamma, &blocks.g_hat);
        for (i, &a) in alpha.iter().enumerate() {
            k.push(l.omega + i, l.sigma, a);
            k.push(l.sigma, l.omega + i, a);
        }
        for (i, &b) in beta.iter().enumerate() {
            k.push(l.gamma + i, l.varsigma, b);
            k.push(l.varsigma, l.gamma + i, b);
        }
        let mut m = TripletBuilder::with_capacity(l.n, l.n, x.nnz() + 2 * y.nnz());
        m.push_block(l.omega, l.omega, x);
        m.push_block(l.omega, l.gamma, y);
        m.push_block_transposed(l.gamma, l.omega, y);
        ReducedPencil { dofs, layout: l, blocks, k: k.build(), m: m.build() }
    }

    pub fn n(&self) -> usize {
        self.layout.n
    }
}

/// `M_P^-1 = W_mass^-1 kron diag(1 / volumes)` in the component-major layout.
pub fn m_p_inverse(table: &BlockSet, material: &MaterialModel) -> Result<CsrMatrix> {
    let d = table.dofs.dim();
    let n = table.dofs.n_cells();
    let winv = invert(&material.weights().mass)?;
    let mut t = TripletBuilder::with_capacity(d * n, d * n, d * d * n);
    for (c, &vol) in table.volumes.iter().enumerate() {
        for r in 0..d {
            for q in 0..d {
                if winv[(r, q)] != 0.0 || r == q {
                    t.push(r * n + c, q * n + c, winv[(r, q)] / vol);
                }
            }
        }
    }
    Ok(t.build())
}

/// Reduced blocks by explicit Schur complements of the full pencil.
pub fn schur_blocks(bp: &BlockPencil, material: &MaterialModel) -> Result<ReducedBlocks> {
    let t = &bp.table;
    let minv = m_p_inverse(t, material)?;
    let f_minv = t.f_p.matmul(&minv)?;
    let minv_g = minv.matmul(&t.g)?;
    Ok(ReducedBlocks {
        k_hat: t.k_p.add_scaled(1.0, &f_minv.matmul(&t.f_p.transpose())?, -1.0)?,
        f_hat: f_minv.matmul(&t.g)?,
        g_hat: t.g.transpose().matmul(&minv_g)?.scale(-1.0),
    })
}

/// Reduced pencil by the Schur path; used to cross-check direct assembly.
pub fn schur_reduce(bp: &BlockPencil, material: &MaterialModel) -> Result<ReducedPencil> {
    let blocks = schur_blocks(bp, material)?;
    let l = bp.layout;
    let alpha: Vec<f64> = (0..bp.dofs().n_e0()).map(|i| bp.k.get(l.omega + i, l.sigma)).collect();
    let beta: Vec<f64> = (0..bp.dofs().n_e()).map(|i| bp.k.get(l.gamma + i, l.varsigma)).collect();
    Ok(ReducedPencil::from_blocks(bp.dofs().clone(), blocks, &bp.table.x, &bp.table.y, &alpha, &beta))
}

/// The elimination matrix `W`, rows ordered `(omega, gamma, sigma, varsigma,
/// eta)` and columns in the full-pencil order.
pub fn elimination_matrix(bp: &BlockPencil, material: &MaterialModel) -> Result<CsrMatrix> {
    let t = &bp.table;
    let l = bp.layout;
    let d = t.dofs.clone();
    let minv = m_p_inverse(t, material)?;
    let f_minv = t.f_p.matmul(&minv)?;
    let gt_minv = t.g.transpose().matmul(&minv)?;
    let mut w = TripletBuilder::new(l.n, l.n);
    let (n_e0, n_e, n_t) = (d.n_e0(), d.n_e(), d.n_t());
    for i in 0..n_e0 {
        w.push(i, l.omega + i, 1.0);
    }
    w.push_block(0, l.eta, &f_minv.scale(-1.0));
    let row_gamma = n_e0;
    w.push_block(row_gamma, l.eta, &gt_minv);
    for i in 0..n_e {
        w.push(row_gamma + i, l.gamma + i, 1.0);
    }
    w.push(n_e0 + n_e, l.sigma, 1.0);
    w.push(n_e0 + n_e + 1, l.varsigma, 1.0);
    for i in 0..n_t {
        w.push(n_e0 + n_e + 2 + i, l.eta + i, 1.0);
    }
    Ok(w.build())
}

/// Max-norm errors of `W K W^T - (K_hat (+) M_P)` and `W M W^T - (M_hat (+) 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CongruenceReport {
    pub stiffness_error: f64,
    pub mass_error: f64,
    /// `max |K|`, for relative comparisons
    pub stiffness_scale: f64,
    pub mass_scale: f64,
}

pub fn congruence_check(bp: &BlockPencil, rp: &ReducedPencil, material: &MaterialModel) -> Result<CongruenceReport> {
    let w = elimination_matrix(bp, material)?;
    let wt = w.transpose();
    let wkw = w.matmul(&bp.k)?.matmul(&wt)?;
    let wmw = w.matmul(&bp.m)?.matmul(&wt)?;
    let n = bp.n();
    let nr = rp.n();
    let mut k_want = TripletBuilder::new(n, n);
    k_want.push_block(0, 0, &rp.k);
    k_want.push_block(nr, nr, &bp.table.m_p);
    let mut m_want = TripletBuilder::new(n, n);
    m_want.push_block(0, 0, &rp.m);
    Ok(CongruenceReport {
        stiffness_error: wkw.max_abs_diff(&k_want.build())?,
        mass_error: wmw.max_abs_diff(&m_want.build())?,
        stiffness_scale: bp.k.max_abs(),
        mass_scale: bp.m.max_abs(),
    })
}

/// Outcome of comparing the full and reduced spectra with the dense oracle.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub n_full: usize,
    pub n_reduced: usize,
    pub n_t: usize,
    pub finite_full: Vec<Complex64>,
    pub finite_reduced: Vec<Complex64>,
    pub infinite_full: usize,
    pub infinite_reduced: usize,
    /// largest `|lambda_full - lambda_reduced| / |lambda_full|` over matched pairs
    pub max_relative_mismatch: f64,
}

impl SpectrumReport {
    pub fn infinite_removed(&self) -> isize {
        self.infinite_full as isize - self.infinite_reduced as isize
    }

    /// Same finite spectrum to `tol` and exactly `n_t` infinite eigenvalues
    /// removed.
    pub fn holds(&self, tol: f64) -> bool {
        self.finite_full.len() == self.finite_reduced.len()
            && self.max_relative_mismatch <= tol
            && self.infinite_removed() == self.n_t as isize
    }
}

/// Dense full-spectrum check that both pencils share their finite
/// eigenvalues. Refuses pencils larger than `n_max`.
pub fn verify_spectrum_relation(bp: &BlockPencil, rp: &ReducedPencil, n_max: usize) -> Result<SpectrumReport> {
    verify_spectrum_relation_with(bp, rp, n_max, dense::INFINITY_RATIO)
}

pub fn verify_spectrum_relation_with(
    bp: &BlockPencil,
    rp: &ReducedPencil,
    n_max: usize,
    infinity_ratio: f64,
) -> Result<SpectrumReport> {
    if bp.n() > n_max {
        return Err(Error::OracleTooLarge { size: bp.n(), limit: n_max });
    }
    let full = dense::pencil_eigenvalues(&bp.k.to_dense(), &bp.m.to_dense())?;
    let red = dense::pencil_eigenvalues(&rp.k.to_dense(), &rp.m.to_dense())?;
    let (ff, fi) = dense::split_finite(&full, infinity_ratio);
    let (rf, ri) = dense::split_finite(&red, infinity_ratio);
    let mismatch = match_greedy(&ff, &rf);
    Ok(SpectrumReport {
        n_full: bp.n(),
        n_reduced: rp.n(),
        n_t: bp.dofs().n_t(),
        finite_full: ff,
        finite_reduced: rf,
        infinite_full: fi,
        infinite_reduced: ri,
        max_relative_mismatch: mismatch,
    })
}

/// Pairs each eigenvalue of `a` with its nearest unused partner in `b`,
/// processing the closest pairs first. Returns the worst relative distance,
/// or infinity when the counts differ.
fn match_greedy(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut pairs = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm() / x.norm().max(f64::MIN_POSITIVE), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let (mut used_a, mut used_b) = (vec![false; a.len()], vec![false; b.len()]);
    let mut worst = 0.0f64;
    let mut matched = 0;
    for (dist, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            worst = worst.max(dist);
            matched += 1;
            if matched == a.len() {
                break;
            }
        }
    }
    worst
}
