//! Simplicial meshes of the benchmark domains.
//!
//! A [`Mesh`] is immutable after construction. Cells are stored with
//! positive orientation, and the boundary flags are derived from the facet
//! topology rather than trusted from input.

mod generate;
mod io;
mod refine;

use std::collections::HashMap;

use crate::error::{Error, Result};

pub use generate::{generate, DomainSpec, DOMAIN_NAMES};
pub use io::{format_mesh, parse_mesh, read_mesh, write_mesh, ReadReport};
pub use refine::refine;

/// Curved surface a group of boundary vertices lives on. Refinement projects
/// new boundary midpoints of a tagged group back onto it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Surface {
    Circle { center: [f64; 2], radius: f64 },
    Sphere { center: [f64; 3], radius: f64 },
    /// Infinite cylinder around the line `point + t * direction`.
    Cylinder {
        point: [f64; 3],
        direction: [f64; 3],
        radius: f64,
    },
}

impl Surface {
    pub fn project(&self, p: &mut [f64]) {
        match *self {
            Surface::Circle { center, radius } => {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                let r = dx.hypot(dy);
                if r > 0.0 {
                    p[0] = center[0] + radius * dx / r;
                    p[1] = center[1] + radius * dy / r;
                }
            }
            Surface::Sphere { center, radius } => {
                let d = [p[0] - center[0], p[1] - center[1], p[2] - center[2]];
                let r = norm3(&d);
                if r > 0.0 {
                    for k in 0..3 {
                        p[k] = center[k] + radius * d[k] / r;
                    }
                }
            }
            Surface::Cylinder {
                point,
                direction,
                radius,
            } => {
                let len = norm3(&direction);
                let u = [direction[0] / len, direction[1] / len, direction[2] / len];
                let d = [p[0] - point[0], p[1] - point[1], p[2] - point[2]];
                let t = d[0] * u[0] + d[1] * u[1] + d[2] * u[2];
                let w = [d[0] - t * u[0], d[1] - t * u[1], d[2] - t * u[2]];
                let r = norm3(&w);
                if r > 0.0 {
                    for k in 0..3 {
                        p[k] = point[k] + t * u[k] + radius * w[k] / r;
                    }
                }
            }
        }
    }

    /// Distance from `p` to the surface.
    pub fn distance(&self, p: &[f64]) -> f64 {
        let mut q = p.to_vec();
        self.project(&mut q);
        q.iter()
            .zip(p)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Sorted vertex tuple identifying a facet; unused slots hold `usize::MAX`.
pub(crate) type FacetKey = [usize; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
    boundary: Vec<bool>,
    surfaces: Vec<Surface>,
    surface_tag: Vec<Option<usize>>,
}

impl Mesh {
    /// Builds a mesh from flat coordinate and connectivity arrays.
    ///
    /// Negatively oriented cells are flipped; the number of flipped cells is
    /// returned alongside the mesh.
    pub fn from_parts(dim: usize, coords: Vec<f64>, mut cells: Vec<usize>) -> Result<(Mesh, usize)> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidMesh(format!("dimension {dim} is not 2 or 3")));
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidMesh("coordinate array length is not a multiple of dim".into()));
        }
        let nv = coords.len() / dim;
        let stride = dim + 1;
        if cells.len() % stride != 0 {
            return Err(Error::InvalidMesh("cell array length is not a multiple of dim + 1".into()));
        }
        if let Some(&bad) = cells.iter().find(|&&v| v >= nv) {
            return Err(Error::InvalidMesh(format!("cell references vertex {bad} but only {nv} vertices exist")));
        }
        let mut flipped = 0;
        for (c, cell) in cells.chunks_mut(stride).enumerate() {
            let vol = signed_volume(dim, &coords, cell);
            if vol.abs() <= f64::EPSILON * 1e-3 {
                return Err(Error::DegenerateCell { cell: c, volume: vol });
            }
            if vol < 0.0 {
                cell.swap(0, 1);
                flipped += 1;
            }
        }
        let mut mesh = Mesh {
            dim,
            coords,
            cells,
            boundary: vec![false; nv],
            surfaces: Vec::new(),
            surface_tag: vec![None; nv],
        };
        let facets = mesh.facet_counts();
        for (key, &count) in &facets {
            match count {
                1 => {
                    for &v in key.iter().take(dim) {
                        mesh.boundary[v] = true;
                    }
                }
                2 => {}
                n => {
                    return Err(Error::InvalidMesh(format!(
                        "facet {:?} is shared by {n} cells",
                        &key[..dim]
                    )))
                }
            }
        }
        Ok((mesh, flipped))
    }

    pub fn new(dim: usize, coords: Vec<f64>, cells: Vec<usize>) -> Result<Mesh> {
        Self::from_parts(dim, coords, cells).map(|(m, _)| m)
    }

    /// Attaches curved-surface tags to boundary vertices.
    pub fn with_surfaces(mut self, surfaces: Vec<Surface>, tags: Vec<Option<usize>>) -> Result<Mesh> {
        if tags.len() != self.n_vertices() {
            return Err(Error::InvalidMesh("surface tag array has wrong length".into()));
        }
        for (v, t) in tags.iter().enumerate() {
            if let Some(s) = *t {
                if s >= surfaces.len() {
                    return Err(Error::InvalidMesh(format!("vertex {v} tagged with unknown surface {s}")));
                }
                if !self.boundary[v] {
                    return Err(Error::InvalidMesh(format!("interior vertex {v} carries a surface tag")));
                }
            }
        }
        self.surfaces = surfaces;
        self.surface_tag = tags;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.boundary.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn point(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let s = self.dim + 1;
        &self.cells[c * s..(c + 1) * s]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks(self.dim + 1)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn n_boundary_vertices(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }

    pub fn surfaces(&self) -> &[Surface] {
        &self.surfaces
    }

    pub fn surface_tag(&self, v: usize) -> Option<usize> {
        self.surface_tag[v]
    }

    pub fn surface_tags(&self) -> &[Option<usize>] {
        &self.surface_tag
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        signed_volume(self.dim, &self.coords, self.cell(c))
    }

    pub fn volume(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_volume(c)).sum()
    }

    /// Number of cells sharing each facet.
    pub(crate) fn facet_counts(&self) -> HashMap<FacetKey, u8> {
        let mut counts: HashMap<FacetKey, u8> = HashMap::with_capacity(self.n_cells() * (self.dim + 1));
        for cell in self.cells() {
            for skip in 0..=self.dim {
                *counts.entry(facet_key(cell, skip)).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Facets owned by exactly one cell, as sorted vertex tuples.
    pub fn boundary_facets(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self
            .facet_counts()
            .into_iter()
            .filter(|&(_, n)| n == 1)
            .map(|(k, _)| k[..self.dim].to_vec())
            .collect();
        out.sort_unstable();
        out
    }

    pub fn max_edge_length(&self) -> f64 {
        self.cells()
            .flat_map(|cell| {
                let mut lens = Vec::with_capacity(6);
                for i in 0..cell.len() {
                    for j in i + 1..cell.len() {
                        lens.push(self.distance(cell[i], cell[j]));
                    }
                }
                lens
            })
            .fold(0.0, f64::max)
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.point(a)
            .iter()
            .zip(self.point(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Smallest ratio inradius / diameter over all cells.
    pub fn min_quality(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| self.cell_quality(c))
            .fold(f64::INFINITY, f64::min)
    }

    fn cell_quality(&self, c: usize) -> f64 {
        let cell = self.cell(c);
        let vol = self.cell_volume(c);
        let mut diameter: f64 = 0.0;
        for i in 0..cell.len() {
            for j in i + 1..cell.len() {
                diameter = diameter.max(self.distance(cell[i], cell[j]));
            }
        }
        let facet_measure: f64 = (0..cell.len())
            .map(|skip| {
                let f: Vec<usize> = cell.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &v)| v).collect();
                self.simplex_measure(&f)
            })
            .sum();
        let inradius = self.dim as f64 * vol / facet_measure;
        inradius / diameter
    }

    /// Measure of a (dim-1)-simplex embedded in the mesh dimension.
    fn simplex_measure(&self, verts: &[usize]) -> f64 {
        let p0 = self.point(verts[0]);
        match verts.len() {
            2 => self.distance(verts[0], verts[1]),
            3 => {
                let a: Vec<f64> = self.point(verts[1]).iter().zip(p0).map(|(x, y)| x - y).collect();
                let b: Vec<f64> = self.point(verts[2]).iter().zip(p0).map(|(x, y)| x - y).collect();
                let (a, b) = (pad3(&a), pad3(&b));
                0.5 * norm3(&cross(&a, &b))
            }
            _ => unreachable!("facets have 2 or 3 vertices"),
        }
    }

    pub(crate) fn from_raw(
        dim: usize,
        coords: Vec<f64>,
        cells: Vec<usize>,
        surfaces: Vec<Surface>,
        surface_tag: Vec<Option<usize>>,
    ) -> Result<Mesh> {
        let mesh = Mesh::new(dim, coords, cells)?;
        // Tags on vertices that ended up interior are dropped (grid compaction
        // may tag conservatively).
        let tags = surface_tag
            .into_iter()
            .enumerate()
            .map(|(v, t)| if mesh.boundary[v] { t } else { None })
            .collect();
        mesh.with_surfaces(surfaces, tags)
    }
}

pub(crate) fn facet_key(cell: &[usize], skip: usize) -> FacetKey {
    let mut key = [usize::MAX; 3];
    let mut n = 0;
    for (k, &v) in cell.iter().enumerate() {
        if k != skip {
            key[n] = v;
            n += 1;
        }
    }
    key[..n].sort_unstable();
    key
}

pub(crate) fn signed_volume(dim: usize, coords: &[f64], cell: &[usize]) -> f64 {
    let p = |v: usize, k: usize| coords[v * dim + k];
    match dim {
        2 => {
            let (a, b, c) = (cell[0], cell[1], cell[2]);
            0.5 * ((p(b, 0) - p(a, 0)) * (p(c, 1) - p(a, 1)) - (p(c, 0) - p(a, 0)) * (p(b, 1) - p(a, 1)))
        }
        3 => {
            let e = |v: usize| [p(v, 0) - p(cell[0], 0), p(v, 1) - p(cell[0], 1), p(v, 2) - p(cell[0], 2)];
            let (a, b, c) = (e(cell[1]), e(cell[2]), e(cell[3]));
            let n = cross(&a, &b);
            (n[0] * c[0] + n[1] * c[1] + n[2] * c[2]) / 6.0
        }
        _ => unreachable!(),
    }
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn pad3(v: &[f64]) -> [f64; 3] {
    let mut out = [0.0; 3];
    out[..v.len()].copy_from_slice(v);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> Mesh {
        let coords = vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        Mesh::new(2, coords, vec![0, 1, 2, 0, 2, 3]).unwrap()
    }

    #[test]
    fn boundary_flags_follow_facets() {
        let m = two_triangles();
        assert_eq!(m.n_boundary_vertices(), 4);
        assert_eq!(m.boundary_facets().len(), 4);
        assert!((m.volume() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_cells_are_flipped() {
        let coords = vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let (m, flipped) = Mesh::from_parts(2, coords, vec![0, 2, 1]).unwrap();
        assert_eq!(flipped, 1);
        assert!(m.cell_volume(0) > 0.0);
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let coords = vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        assert!(Mesh::new(2, coords, vec![0, 1, 3]).is_err());
    }

    #[test]
    fn nonmanifold_facet_is_rejected() {
        let coords = vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, -1.0, 1.0, 1.0];
        // three triangles on edge (0,1)
        let err = Mesh::new(2, coords, vec![0, 1, 2, 0, 1, 3, 0, 1, 4]);
        assert!(err.is_err());
    }

    #[test]
    fn projections_land_on_surfaces() {
        let mut p = [0.3, 0.4];
        Surface::Circle { center: [0.0, 0.0], radius: 1.0 }.project(&mut p);
        assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-15);
        let cyl = Surface::Cylinder { point: [0.5, 0.5, 0.0], direction: [0.0, 0.0, 1.0], radius: 0.25 };
        let mut q = [0.6, 0.55, 0.7];
        cyl.project(&mut q);
        assert!((q[2] - 0.7).abs() < 1e-15);
        assert!(cyl.distance(&q) < 1e-15);
    }

    #[test]
    fn reference_simplex_quality() {
        let m = two_triangles();
        let q = m.min_quality();
        // right isosceles triangle: r = (2 - sqrt 2)/2, diameter sqrt 2
        let expected = (2.0 - 2f64.sqrt()) / 2.0 / 2f64.sqrt();
        assert!((q - expected).abs() < 1e-14);
    }
}
