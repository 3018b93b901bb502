//! Sparse assembly of the P1 x P0^d x P1 mixed discretization.
//!
//! Unknowns are ordered `(omega, eta, gamma, sigma, varsigma)`: interior P1
//! values, component-major P0^d values (`c * n_cells + t`), P1 values on all
//! vertices, and the two zero-mean multipliers.

use crate::error::{Error, Result};
use crate::material::{Mat, MaterialModel};
use crate::mesh::Mesh;
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Volume and constant barycentric gradients of one simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub volume: f64,
    /// `grads[i][..dim]` is the gradient of the hat function of local vertex `i`.
    pub grads: [[f64; 3]; 4],
}

pub fn element_geometry(mesh: &Mesh, cell: usize) -> Result<ElementGeometry> {
    let d = mesh.dim();
    let v = mesh.cell(cell);
    let x0 = mesh.point(v[0]);
    // J[r][c] = x_{c+1}[r] - x_0[r]
    let mut j = [[0.0; 3]; 3];
    for c in 0..d {
        let xc = mesh.point(v[c + 1]);
        for r in 0..d {
            j[r][c] = xc[r] - x0[r];
        }
    }
    let (det, inv) = if d == 2 {
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let inv = [[j[1][1] / det, -j[0][1] / det, 0.0], [-j[1][0] / det, j[0][0] / det, 0.0], [0.0; 3]];
        (det, inv)
    } else {
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| j[r0][c0] * j[r1][c1] - j[r0][c1] * j[r1][c0];
        let det = j[0][0] * cof(1, 2, 1, 2) - j[0][1] * cof(1, 2, 0, 2) + j[0][2] * cof(1, 2, 0, 1);
        let mut inv = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                // adjugate: inv[r][c] = cofactor(c, r) / det
                let (a0, a1) = match c {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                let (b0, b1) = match r {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
                inv[r][c] = sign * cof(a0, a1, b0, b1) / det;
            }
        }
        (det, inv)
    };
    let volume = det / if d == 2 { 2.0 } else { 6.0 };
    // relative to the cell's own longest edge
    let mut scale = 0.0f64;
    for a in 0..=d {
        for b in a + 1..=d {
            scale = scale.max(mesh.distance(v[a], v[b]));
        }
    }
    if !(volume > f64::EPSILON * scale.powi(d as i32)) {
        return Err(Error::DegenerateCell { cell, volume });
    }
    // grad lambda_{i+1} = row i of J^{-1}
    let mut grads = [[0.0; 3]; 4];
    for i in 0..d {
        for r in 0..d {
            grads[i + 1][r] = inv[i][r];
            grads[0][r] -= inv[i][r];
        }
    }
    Ok(ElementGeometry { volume, grads })
}

fn all_geometry(mesh: &Mesh) -> Result<Vec<ElementGeometry>> {
    (0..mesh.n_cells()).map(|c| element_geometry(mesh, c)).collect()
}

/// Interior / full P1 numbering and the P0^d layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    dim: usize,
    n_e: usize,
    n_cells: usize,
    /// interior dof -> vertex
    interior: Vec<usize>,
    /// vertex -> interior dof
    interior_of: Vec<Option<usize>>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Result<DofMap> {
        let mut interior = Vec::new();
        let mut interior_of = vec![None; mesh.n_vertices()];
        for v in 0..mesh.n_vertices() {
            if !mesh.is_boundary(v) {
                interior_of[v] = Some(interior.len());
                interior.push(v);
            }
        }
        if interior.is_empty() {
            return Err(Error::EmptyInterior);
        }
        Ok(DofMap { dim: mesh.dim(), n_e: mesh.n_vertices(), n_cells: mesh.n_cells(), interior, interior_of })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// P1 dofs on all vertices.
    pub fn n_e(&self) -> usize {
        self.n_e
    }

    /// P1 dofs on interior vertices.
    pub fn n_e0(&self) -> usize {
        self.interior.len()
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// P0^d dofs: `dim * n_cells`.
    pub fn n_t(&self) -> usize {
        self.dim * self.n_cells
    }

    pub fn interior_vertex(&self, dof: usize) -> usize {
        self.interior[dof]
    }

    pub fn interior_dof(&self, vertex: usize) -> Option<usize> {
        self.interior_of[vertex]
    }

    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior
    }

    /// Index of component `c` on cell `t`.
    #[inline]
    pub fn p0_index(&self, c: usize, t: usize) -> usize {
        c * self.n_cells + t
    }

    /// Size of the full pencil.
    pub fn n_full(&self) -> usize {
        self.n_e0() + self.n_t() + self.n_e + 2
    }

    /// Size of the reduced pencil.
    pub fn n_reduced(&self) -> usize {
        self.n_e0() + self.n_e + 2
    }
}

/// Which P1 space indexes a block's rows or columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Interior,
    All,
}

impl Space {
    fn len(self, dofs: &DofMap) -> usize {
        match self {
            Space::Interior => dofs.n_e0(),
            Space::All => dofs.n_e(),
        }
    }

    #[inline]
    fn index(self, dofs: &DofMap, vertex: usize) -> Option<usize> {
        match self {
            Space::Interior => dofs.interior_of[vertex],
            Space::All => Some(vertex),
        }
    }
}

/// Precomputed element data shared by all assembly routines.
#[derive(Debug, Clone)]
pub struct Discretization<'m> {
    pub mesh: &'m Mesh,
    pub dofs: DofMap,
    pub geometry: Vec<ElementGeometry>,
}

impl<'m> Discretization<'m> {
    pub fn new(mesh: &'m Mesh) -> Result<Self> {
        Ok(Discretization { mesh, dofs: DofMap::new(mesh)?, geometry: all_geometry(mesh)? })
    }

    /// `(W grad phi_j, grad phi_i)` with rows in `rows` and columns in `cols`.
    pub fn stiffness(&self, w: &Mat, rows: Space, cols: Space) -> CsrMatrix {
        let d = self.mesh.dim();
        let k = d + 1;
        let mut t = TripletBuilder::with_capacity(rows.len(&self.dofs), cols.len(&self.dofs), self.mesh.n_cells() * k * k);
        for (c, cell) in self.mesh.cells().enumerate() {
            let g = &self.geometry[c];
            for a in 0..k {
                let Some(i) = rows.index(&self.dofs, cell[a]) else { continue };
                for b in 0..k {
                    let Some(j) = cols.index(&self.dofs, cell[b]) else { continue };
                    let mut s = 0.0;
                    for r in 0..d {
                        for q in 0..d {
                            s += g.grads[a][r] * w[(r, q)] * g.grads[b][q];
                        }
                    }
                    t.push(i, j, g.volume * s);
                }
            }
        }
        t.build()
    }

    /// Exact P1 mass `(phi_j, phi_i)`.
    pub fn mass(&self, rows: Space, cols: Space) -> CsrMatrix {
        let d = self.mesh.dim();
        let k = d + 1;
        let denom = ((d + 1) * (d + 2)) as f64;
        let mut t = TripletBuilder::with_capacity(rows.len(&self.dofs), cols.len(&self.dofs), self.mesh.n_cells() * k * k);
        for (c, cell) in self.mesh.cells().enumerate() {
            let vol = self.geometry[c].volume;
            for a in 0..k {
                let Some(i) = rows.index(&self.dofs, cell[a]) else { continue };
                for b in 0..k {
                    let Some(j) = cols.index(&self.dofs, cell[b]) else { continue };
                    let w = if a == b { 2.0 } else { 1.0 };
                    t.push(i, j, vol * w / denom);
                }
            }
        }
        t.build()
    }

    /// `(phi_i, 1)`.
    pub fn load(&self, space: Space) -> Vec<f64> {
        let d = self.mesh.dim();
        let mut out = vec![0.0; space.len(&self.dofs)];
        for (c, cell) in self.mesh.cells().enumerate() {
            let share = self.geometry[c].volume / (d + 1) as f64;
            for &v in cell {
                if let Some(i) = space.index(&self.dofs, v) {
                    out[i] += share;
                }
            }
        }
        out
    }

    /// `(W chi_j, grad phi_i)`: interior P1 rows, P0^d columns.
    pub fn coupling(&self, w: &Mat) -> CsrMatrix {
        let d = self.mesh.dim();
        let mut t = TripletBuilder::with_capacity(self.dofs.n_e0(), self.dofs.n_t(), self.mesh.n_cells() * (d + 1) * d);
        for (c, cell) in self.mesh.cells().enumerate() {
            let g = &self.geometry[c];
            for (a, &v) in cell.iter().enumerate() {
                let Some(i) = self.dofs.interior_of[v] else { continue };
                for comp in 0..d {
                    let s: f64 = (0..d).map(|r| g.grads[a][r] * w[(r, comp)]).sum();
                    t.push(i, self.dofs.p0_index(comp, c), g.volume * s);
                }
            }
        }
        t.build()
    }

    /// `(W chi_j, chi_i)`, block diagonal per cell: `W kron diag(volumes)`.
    pub fn p0_mass(&self, w: &Mat) -> CsrMatrix {
        let d = self.mesh.dim();
        let mut t = TripletBuilder::with_capacity(self.dofs.n_t(), self.dofs.n_t(), self.mesh.n_cells() * d * d);
        for c in 0..self.mesh.n_cells() {
            let vol = self.geometry[c].volume;
            for r in 0..d {
                for q in 0..d {
                    if w[(r, q)] != 0.0 || r == q {
                        t.push(self.dofs.p0_index(r, c), self.dofs.p0_index(q, c), vol * w[(r, q)]);
                    }
                }
            }
        }
        t.build()
    }

    /// `(grad phi_j, chi_i)`: P0^d rows, all-vertex P1 columns.
    pub fn divergence(&self) -> CsrMatrix {
        let d = self.mesh.dim();
        let mut t = TripletBuilder::with_capacity(self.dofs.n_t(), self.dofs.n_e(), self.mesh.n_cells() * (d + 1) * d);
        for (c, cell) in self.mesh.cells().enumerate() {
            let g = &self.geometry[c];
            for comp in 0..d {
                for (a, &v) in cell.iter().enumerate() {
                    t.push(self.dofs.p0_index(comp, c), v, g.volume * g.grads[a][comp]);
                }
            }
        }
        t.build()
    }
}

/// The matrices of the mixed scheme before they are placed into the pencil.
#[derive(Debug, Clone)]
pub struct BlockSet {
    pub dofs: DofMap,
    /// volume of each cell, in mesh order
    pub volumes: Vec<f64>,
    pub k_p: CsrMatrix,
    pub f_p: CsrMatrix,
    pub m_p: CsrMatrix,
    pub g: CsrMatrix,
    pub x: CsrMatrix,
    pub y: CsrMatrix,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

pub fn assemble_blocks(mesh: &Mesh, material: &MaterialModel) -> Result<BlockSet> {
    check_dims(mesh, material)?;
    let disc = Discretization::new(mesh)?;
    let w = material.weights();
    Ok(BlockSet {
        volumes: disc.geometry.iter().map(|g| g.volume).collect(),
        k_p: disc.stiffness(&w.grad, Space::Interior, Space::Interior),
        f_p: disc.coupling(&w.cross),
        m_p: disc.p0_mass(&w.mass),
        g: disc.divergence(),
        x: disc.mass(Space::Interior, Space::Interior),
        y: disc.mass(Space::Interior, Space::All),
        alpha: disc.load(Space::Interior),
        beta: disc.load(Space::All),
        dofs: disc.dofs,
    })
}

fn check_dims(mesh: &Mesh, material: &MaterialModel) -> Result<()> {
    if mesh.dim() != material.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}D mesh with a {}x{} material",
            mesh.dim(),
            material.dim(),
            material.dim()
        )));
    }
    Ok(())
}

/// Block offsets of the five unknown groups in the full pencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FullLayout {
    pub omega: usize,
    pub eta: usize,
    pub gamma: usize,
    pub sigma: usize,
    pub varsigma: usize,
    pub n: usize,
}

impl FullLayout {
    pub fn new(dofs: &DofMap) -> Self {
        let eta = dofs.n_e0();
        let gamma = eta + dofs.n_t();
        let sigma = gamma + dofs.n_e();
        FullLayout { omega: 0, eta, gamma, sigma, varsigma: sigma + 1, n: sigma + 2 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AssemblyOptions {
    /// Scale the multiplier rows and columns so that `alpha` and `beta` have
    /// unit max-norm. The multipliers change by the inverse factors and the
    /// eigenvalues are unaffected.
    pub equilibrate_multipliers: bool,
}

/// `alpha` and `beta` after optional equilibration.
pub(crate) fn multiplier_vectors(t: &BlockSet, opts: AssemblyOptions) -> (Vec<f64>, Vec<f64>) {
    let scale = |v: &[f64]| {
        if !opts.equilibrate_multipliers {
            return v.to_vec();
        }
        let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        v.iter().map(|x| x / m).collect()
    };
    (scale(&t.alpha), scale(&t.beta))
}

/// The full generalized eigenproblem `K z = lambda M z`.
#[derive(Debug, Clone)]
pub struct BlockPencil {
    pub table: BlockSet,
    pub layout: FullLayout,
    pub k: CsrMatrix,
    pub m: CsrMatrix,
}

impl BlockPencil {
    pub fn assemble(mesh: &Mesh, material: &MaterialModel) -> Result<Self> {
        Self::assemble_with(mesh, material, AssemblyOptions::default())
    }

    pub fn assemble_with(mesh: &Mesh, material: &MaterialModel, opts: AssemblyOptions) -> Result<Self> {
        let table = assemble_blocks(mesh, material)?;
        Ok(Self::from_blocks(table, opts))
    }

    pub fn from_blocks(table: BlockSet, opts: AssemblyOptions) -> Self {
        let l = FullLayout::new(&table.dofs);
        let (alpha, beta) = multiplier_vectors(&table, opts);
        let nnz = table.k_p.nnz() + 2 * (table.f_p.nnz() + table.g.nnz() + alpha.len() + beta.len()) + table.m_p.nnz();
        let mut k = TripletBuilder::with_capacity(l.n, l.n, nnz);
        k.push_block(l.omega, l.omega, &table.k_p);
        k.push_block(l.omega, l.eta, &table.f_p);
        k.push_block_transposed(l.eta, l.omega, &table.f_p);
        k.push_block(l.eta, l.eta, &table.m_p);
        let neg_g = table.g.scale(-1.0);
        k.push_block(l.eta, l.gamma, &neg_g);
        k.push_block_transposed(l.gamma, l.eta, &neg_g);
        for (i, &a) in alpha.iter().enumerate() {
            k.push(l.omega + i, l.sigma, a);
            k.push(l.sigma, l.omega + i, a);
        }
        for (i, &b) in beta.iter().enumerate() {
            k.push(l.gamma + i, l.varsigma, b);
            k.push(l.varsigma, l.gamma + i, b);
        }
        let mut m = TripletBuilder::with_capacity(l.n, l.n, table.x.nnz() + 2 * table.y.nnz());
        m.push_block(l.omega, l.omega, &table.x);
        m.push_block(l.omega, l.gamma, &table.y);
        m.push_block_transposed(l.gamma, l.omega, &table.y);
        BlockPencil { layout: l, k: k.build(), m: m.build(), table }
    }

    pub fn dofs(&self) -> &DofMap {
        &self.table.dofs
    }

    pub fn n(&self) -> usize {
        self.layout.n
    }
}

/// Directly assembled reduced blocks.
#[derive(Debug, Clone)]
pub struct ReducedBlocks {
    /// interior x interior
    pub k_hat: CsrMatrix,
    /// interior x all
    pub f_hat: CsrMatrix,
    /// all x all
    pub g_hat: CsrMatrix,
}

/// Reduced blocks from the weights `material.direct_weights()`, with no
/// matrix products.
pub fn assemble_reduced_direct(mesh: &Mesh, material: &MaterialModel) -> Result<ReducedBlocks> {
    check_dims(mesh, material)?;
    let disc = Discretization::new(mesh)?;
    reduced_from(&disc, material)
}

pub(crate) fn reduced_from(disc: &Discretization<'_>, material: &MaterialModel) -> Result<ReducedBlocks> {
    let w = material.direct_weights();
    Ok(ReducedBlocks {
        k_hat: disc.stiffness(&w.k, Space::Interior, Space::Interior),
        f_hat: disc.stiffness(&w.f, Space::Interior, Space::All),
        g_hat: disc.stiffness(&w.g, Space::All, Space::All),
    })
}

/// P1 Dirichlet Laplacian stiffness and mass on interior vertices.
pub fn assemble_dirichlet_laplacian(mesh: &Mesh) -> Result<(CsrMatrix, CsrMatrix)> {
    let disc = Discretization::new(mesh)?;
    let id = Mat::identity(mesh.dim(), mesh.dim());
    Ok((disc.stiffness(&id, Space::Interior, Space::Interior), disc.mass(Space::Interior, Space::Interior)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, DomainSpec};

    fn square(level: i32) -> Mesh {
        generate(&DomainSpec::from_name("square").unwrap(), level).unwrap()
    }

    fn reference_triangle() -> Mesh {
        Mesh::new(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0], vec![0, 1, 2]).unwrap()
    }

    #[test]
    fn reference_gradients() {
        let g = element_geometry(&reference_triangle(), 0).unwrap();
        assert_eq!(g.volume, 0.5);
        assert_eq!(&g.grads[..3], &[[-1.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let tet = Mesh::new(3, vec![0., 0., 0., 1., 0., 0., 0., 1., 0., 0., 0., 1.], vec![0, 1, 2, 3]).unwrap();
        let g = element_geometry(&tet, 0).unwrap();
        assert!((g.volume - 1.0 / 6.0).abs() < 1e-16);
        for r in 0..3 {
            let s: f64 = g.grads.iter().map(|v| v[r]).sum();
            assert!(s.abs() < 1e-15);
            assert_eq!(g.grads[r + 1][r], 1.0);
        }
    }

    #[test]
    fn gradients_sum_to_zero_on_cube() {
        let m = generate(&DomainSpec::from_name("cube").unwrap(), -2).unwrap();
        for c in 0..m.n_cells() {
            let g = element_geometry(&m, c).unwrap();
            assert!((g.volume - m.cell_volume(c)).abs() < 1e-15);
            for r in 0..3 {
                let s: f64 = g.grads.iter().map(|v| v[r]).sum();
                assert!(s.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn reference_element_matrices() {
        let mesh = reference_triangle();
        // every vertex is on the boundary, so use the all-vertex spaces directly
        let disc = Discretization {
            mesh: &mesh,
            dofs: DofMap { dim: 2, n_e: 3, n_cells: 1, interior: vec![], interior_of: vec![None; 3] },
            geometry: vec![element_geometry(&mesh, 0).unwrap()],
        };
        let w = Mat::identity(2, 2) / 3.0;
        let k = disc.stiffness(&w, Space::All, Space::All).to_dense();
        let want = Mat::from_row_slice(3, 3, &[2., -1., -1., -1., 1., 0., -1., 0., 1.]) * (1.0 / 6.0);
        assert!((k - want).amax() < 1e-16);
        let x = disc.mass(Space::All, Space::All).to_dense();
        let want = Mat::from_row_slice(3, 3, &[2., 1., 1., 1., 2., 1., 1., 1., 2.]) / 24.0;
        assert!((x - want).amax() < 1e-17);
        assert!(matches!(assemble_blocks(&mesh, &MaterialModel::preset("A1").unwrap()), Err(Error::EmptyInterior)));
    }

    #[test]
    fn block_set_structure() {
        let mesh = square(-1);
        let mat = MaterialModel::preset("A1").unwrap();
        let t = assemble_blocks(&mesh, &mat).unwrap();
        let d = &t.dofs;
        assert_eq!((d.n_e(), d.n_e0(), d.n_t()), (25, 9, 64));
        assert_eq!(t.k_p.shape(), (9, 9));
        assert_eq!(t.f_p.shape(), (9, 64));
        assert_eq!(t.g.shape(), (64, 25));
        assert_eq!(t.y.shape(), (9, 25));
        assert!((t.beta.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(t.alpha.iter().sum::<f64>() < 1.0);
        // M_P = (4/3) diag(vol) in each of the two component blocks
        for i in 0..64 {
            assert_eq!(t.m_p.get(i, i), 4.0 / 3.0 * t.volumes[i % 32]);
            assert_eq!(t.m_p.row(i).count(), 1);
        }
        let ones = vec![1.0; 25];
        assert!(t.g.matvec(&ones).iter().all(|v| v.abs() < 1e-15));
        for s in [&t.k_p, &t.x] {
            assert!(s.asymmetry() <= 1e-13 * s.max_abs());
        }
    }

    #[test]
    fn kronecker_layout_with_coupled_weights() {
        let mesh = generate(&DomainSpec::from_name("cube").unwrap(), -2).unwrap();
        let mat = MaterialModel::preset("A8").unwrap();
        let t = assemble_blocks(&mesh, &mat).unwrap();
        let n = mesh.n_cells();
        let w = &mat.weights().mass;
        for (i, j, v) in t.m_p.iter() {
            let (ci, ti) = (i / n, i % n);
            let (cj, tj) = (j / n, j % n);
            assert_eq!(ti, tj);
            assert_eq!(v, t.volumes[ti] * w[(ci, cj)]);
        }
    }

    #[test]
    fn full_pencil_blocks() {
        let mesh = square(-1);
        let bp = BlockPencil::assemble(&mesh, &MaterialModel::preset("A1").unwrap()).unwrap();
        let l = bp.layout;
        assert_eq!(l.n, 9 + 64 + 25 + 2);
        assert_eq!(bp.k.asymmetry(), 0.0);
        assert_eq!(bp.m.asymmetry(), 0.0);
        for (i, j, _) in bp.m.iter() {
            let ok = (i < l.eta && (j < l.eta || (l.gamma..l.sigma).contains(&j)))
                || ((l.gamma..l.sigma).contains(&i) && j < l.eta);
            assert!(ok, "M entry at ({i}, {j})");
        }
        let row: Vec<_> = bp.k.row(l.sigma).collect();
        assert_eq!(row.len(), 9);
        assert!(row.iter().all(|&(j, v)| j < l.eta && v == bp.table.alpha[j]));
        let row: Vec<_> = bp.k.row(l.varsigma).collect();
        assert!(row.iter().all(|&(j, v)| (l.gamma..l.sigma).contains(&j) && v == bp.table.beta[j - l.gamma]));
        assert_eq!(bp.k.get(l.sigma, l.sigma), 0.0);
    }

    #[test]
    fn equilibration_scales_multipliers() {
        let mesh = square(-1);
        let mat = MaterialModel::preset("A1").unwrap();
        let opts = AssemblyOptions { equilibrate_multipliers: true };
        let bp = BlockPencil::assemble_with(&mesh, &mat, opts).unwrap();
        let m = bp.k.row(bp.layout.sigma).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        assert_eq!(m, 1.0);
    }

    #[test]
    fn direct_reduced_regime_one_is_scaled_laplacian() {
        let mesh = square(0);
        let mat = MaterialModel::preset("A1").unwrap();
        let r = assemble_reduced_direct(&mesh, &mat).unwrap();
        let (lap, _) = assemble_dirichlet_laplacian(&mesh).unwrap();
        assert!(r.k_hat.max_abs_diff(&lap.scale(0.25)).unwrap() < 1e-15);
        assert_eq!(r.f_hat.shape(), (lap.nrows(), mesh.n_vertices()));
        // G_hat = (A - I) weighted stiffness is negative semidefinite
        let eig = nalgebra::SymmetricEigen::new(r.g_hat.to_dense()).eigenvalues;
        assert!(eig.max() <= 1e-12);
    }

    #[test]
    fn laplacian_rows_annihilate_constants() {
        let mesh = generate(&DomainSpec::from_name("disk").unwrap(), 0).unwrap();
        let disc = Discretization::new(&mesh).unwrap();
        let full = disc.stiffness(&Mat::identity(2, 2), Space::All, Space::All);
        let ones = vec![1.0; mesh.n_vertices()];
        assert!(full.matvec(&ones).iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn assembly_is_deterministic() {
        let mesh = square(0);
        let mat = MaterialModel::preset("A4").unwrap();
        let a = BlockPencil::assemble(&mesh, &mat).unwrap();
        let b = BlockPencil::assemble(&mesh, &mat).unwrap();
        assert_eq!(a.k, b.k);
        assert_eq!(a.m, b.m);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mesh = square(-1);
        assert!(matches!(
            BlockPencil::assemble(&mesh, &MaterialModel::preset("A6").unwrap()),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
