use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{refine, Mesh, Surface};
use crate::error::{Error, Result};

/// Benchmark domains. Mesh level `l` targets the size `h_l = 2^(-3-l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum DomainSpec {
    /// Disk centred at the origin.
    Disk { radius: f64 },
    /// `[0, side]^2`.
    Square { side: f64 },
    /// `[-a, a]^2` minus the quadrant `(0, a] x [-a, 0)`.
    Lshape { half_width: f64 },
    /// `inner <= |x| <= outer`.
    Annulus { inner: f64, outer: f64 },
    /// `[0, side]^3`.
    Cube { side: f64 },
    /// `[0, 1]^3` minus the open box `(lo, hi)^3`.
    CubeCavity { lo: f64, hi: f64 },
    /// `[0, 1]^3` minus the vertical cylinder of the given radius around `x = y = 1/2`.
    CubeCylinderHole { radius: f64 },
    /// Ball centred at the origin.
    Ball { radius: f64 },
}

pub const DOMAIN_NAMES: [&str; 8] = [
    "disk",
    "square",
    "lshape",
    "annulus",
    "cube",
    "cube_cavity",
    "cube_cylinder_hole",
    "ball",
];

impl DomainSpec {
    pub fn from_name(name: &str) -> Result<DomainSpec> {
        Ok(match name {
            "disk" => DomainSpec::Disk { radius: 0.5 },
            "square" => DomainSpec::Square { side: 1.0 },
            "lshape" => DomainSpec::Lshape { half_width: 0.5 },
            "annulus" => DomainSpec::Annulus { inner: 0.25, outer: 0.5 },
            "cube" => DomainSpec::Cube { side: 1.0 },
            "cube_cavity" => DomainSpec::CubeCavity { lo: 0.25, hi: 0.75 },
            "cube_cylinder_hole" => DomainSpec::CubeCylinderHole { radius: 0.25 },
            "ball" => DomainSpec::Ball { radius: 1.0 },
            other => return Err(Error::UnsupportedDomain(format!("unknown domain `{other}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            DomainSpec::Disk { .. } => "disk",
            DomainSpec::Square { .. } => "square",
            DomainSpec::Lshape { .. } => "lshape",
            DomainSpec::Annulus { .. } => "annulus",
            DomainSpec::Cube { .. } => "cube",
            DomainSpec::CubeCavity { .. } => "cube_cavity",
            DomainSpec::CubeCylinderHole { .. } => "cube_cylinder_hole",
            DomainSpec::Ball { .. } => "ball",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Disk { .. } | DomainSpec::Square { .. } | DomainSpec::Lshape { .. } | DomainSpec::Annulus { .. } => 2,
            _ => 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DomainSpec::Disk { radius } | DomainSpec::Ball { radius } => radius > 0.0,
            DomainSpec::Square { side } | DomainSpec::Cube { side } => side > 0.0,
            DomainSpec::Lshape { half_width } => half_width > 0.0,
            DomainSpec::Annulus { inner, outer } => inner > 0.0 && inner < outer,
            DomainSpec::CubeCavity { lo, hi } => 0.0 < lo && lo < hi && hi < 1.0,
            DomainSpec::CubeCylinderHole { radius } => radius > 0.0 && radius < 0.5,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedDomain(format!("invalid parameters for {self:?}")))
        }
    }

    /// Coarsest level the generator supports.
    pub fn min_level(&self) -> i32 {
        match self {
            DomainSpec::Square { .. } | DomainSpec::Cube { .. } => -3,
            DomainSpec::Lshape { .. } | DomainSpec::Ball { .. } => -2,
            DomainSpec::CubeCavity { .. } => -1,
            DomainSpec::Disk { .. } | DomainSpec::Annulus { .. } | DomainSpec::CubeCylinderHole { .. } => 0,
        }
    }

    /// Target mesh size `2^(-3-level)`.
    pub fn mesh_size(level: i32) -> f64 {
        2f64.powi(-3 - level)
    }

    /// Exact measure of the continuous domain.
    pub fn exact_volume(&self) -> f64 {
        match *self {
            DomainSpec::Disk { radius } => PI * radius * radius,
            DomainSpec::Square { side } => side * side,
            DomainSpec::Lshape { half_width } => 3.0 * half_width * half_width,
            DomainSpec::Annulus { inner, outer } => PI * (outer * outer - inner * inner),
            DomainSpec::Cube { side } => side * side * side,
            DomainSpec::CubeCavity { lo, hi } => 1.0 - (hi - lo).powi(3),
            DomainSpec::CubeCylinderHole { radius } => 1.0 - PI * radius * radius,
            DomainSpec::Ball { radius } => 4.0 / 3.0 * PI * radius.powi(3),
        }
    }
}

/// Generates the mesh of `spec` at `level` (mesh size about `2^(-3-level)`).
///
/// Grid domains are built directly at the requested resolution; curved
/// domains start from a coarse polar/prismatic mesh at level 0 and are
/// refined with boundary projection.
pub fn generate(spec: &DomainSpec, level: i32) -> Result<Mesh> {
    spec.validate()?;
    if level < spec.min_level() {
        return Err(Error::UnsupportedDomain(format!(
            "{} supports levels >= {}, got {level}",
            spec.name(),
            spec.min_level()
        )));
    }
    if level > 12 {
        return Err(Error::UnsupportedDomain(format!("level {level} is beyond any practical size")));
    }
    let cells_per_unit = 2usize.pow((3 + level) as u32);
    match *spec {
        DomainSpec::Square { side } => grid_2d(cells_per_unit, [0.0, 0.0], side / cells_per_unit as f64, |_, _| true),
        DomainSpec::Lshape { half_width } => {
            let n = cells_per_unit;
            let h = 2.0 * half_width / n as f64;
            grid_2d(n, [-half_width, -half_width], h, |cx, cy| !(cx > 0.0 && cy < 0.0))
        }
        DomainSpec::Cube { side } => grid_3d(cells_per_unit, side / cells_per_unit as f64, |_| true),
        DomainSpec::CubeCavity { lo, hi } => {
            let n = cells_per_unit;
            let aligned = |x: f64| ((x * n as f64) - (x * n as f64).round()).abs() < 1e-9;
            if !aligned(lo) || !aligned(hi) {
                return Err(Error::UnsupportedDomain(format!(
                    "cavity bounds ({lo}, {hi}) do not align with a {n}-cell grid"
                )));
            }
            grid_3d(n, 1.0 / n as f64, |c| !c.iter().all(|&x| x > lo && x < hi))
        }
        DomainSpec::Disk { radius } => {
            let base = polar_disk(radius, 4)?;
            refine_times(base, level as u32)
        }
        DomainSpec::Annulus { inner, outer } => {
            let base = polar_annulus(inner, outer, 2, 24)?;
            refine_times(base, level as u32)
        }
        DomainSpec::CubeCylinderHole { radius } => {
            let base = cylinder_hole_prisms(radius, 16, 2, 8)?;
            refine_times(base, level as u32)
        }
        DomainSpec::Ball { radius } => mapped_ball(radius, 2 * cells_per_unit),
    }
}

fn refine_times(mut mesh: Mesh, times: u32) -> Result<Mesh> {
    for _ in 0..times {
        mesh = refine(&mesh)?;
    }
    Ok(mesh)
}

/// Structured triangulation of an `n x n` grid, two triangles per square
/// split along the `(i, j) -> (i+1, j+1)` diagonal. `keep` filters squares by
/// their centre.
fn grid_2d(n: usize, origin: [f64; 2], h: f64, keep: impl Fn(f64, f64) -> bool) -> Result<Mesh> {
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(6 * n * n);
    for j in 0..n {
        for i in 0..n {
            let cx = origin[0] + (i as f64 + 0.5) * h;
            let cy = origin[1] + (j as f64 + 0.5) * h;
            if !keep(cx, cy) {
                continue;
            }
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            cells.extend_from_slice(&[a, b, c, a, c, d]);
        }
    }
    let mut coords = Vec::with_capacity(2 * (n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            coords.push(origin[0] + i as f64 * h);
            coords.push(origin[1] + j as f64 * h);
        }
    }
    let (coords, cells, _) = compact(2, coords, cells, Vec::new());
    Mesh::new(2, coords, cells)
}

/// Kuhn subdivision of an `n^3` voxel grid of `[0, n h]^3`: six tetrahedra per
/// voxel sharing its main diagonal. `keep` filters voxels by their centre.
fn grid_3d(n: usize, h: f64, keep: impl Fn([f64; 3]) -> bool) -> Result<Mesh> {
    let (coords, cells) = kuhn_grid(n, [0.0; 3], h, keep);
    let (coords, cells, _) = compact(3, coords, cells, Vec::new());
    Mesh::new(3, coords, cells)
}

fn kuhn_grid(n: usize, origin: [f64; 3], h: f64, keep: impl Fn([f64; 3]) -> bool) -> (Vec<f64>, Vec<usize>) {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let m = n + 1;
    let idx = |c: [usize; 3]| (c[2] * m + c[1]) * m + c[0];
    let mut cells = Vec::with_capacity(24 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let centre = [
                    origin[0] + (i as f64 + 0.5) * h,
                    origin[1] + (j as f64 + 0.5) * h,
                    origin[2] + (k as f64 + 0.5) * h,
                ];
                if !keep(centre) {
                    continue;
                }
                for perm in PERMS {
                    let mut c = [i, j, k];
                    cells.push(idx(c));
                    for &axis in &perm {
                        c[axis] += 1;
                        cells.push(idx(c));
                    }
                }
            }
        }
    }
    let mut coords = Vec::with_capacity(3 * m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                coords.push(origin[0] + i as f64 * h);
                coords.push(origin[1] + j as f64 * h);
                coords.push(origin[2] + k as f64 * h);
            }
        }
    }
    (coords, cells)
}

/// Drops unreferenced vertices, renumbering in increasing original order.
fn compact(
    dim: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
    tags: Vec<Option<usize>>,
) -> (Vec<f64>, Vec<usize>, Vec<Option<usize>>) {
    let nv = coords.len() / dim;
    let mut used = vec![false; nv];
    for &v in &cells {
        used[v] = true;
    }
    let mut map = vec![usize::MAX; nv];
    let mut new_coords = Vec::with_capacity(coords.len());
    let mut new_tags = Vec::new();
    let mut next = 0;
    for v in 0..nv {
        if used[v] {
            map[v] = next;
            next += 1;
            new_coords.extend_from_slice(&coords[v * dim..(v + 1) * dim]);
            if !tags.is_empty() {
                new_tags.push(tags[v]);
            }
        }
    }
    let cells = cells.into_iter().map(|v| map[v]).collect();
    (new_coords, cells, new_tags)
}

/// Triangulates the strip between two closed vertex loops ordered by
/// increasing angle, both starting at angle 0. Advances along the loop whose
/// next vertex has the smaller angle; ties advance the inner loop.
fn zip_loops(inner: &[(usize, f64)], outer: &[(usize, f64)], cells: &mut Vec<usize>) {
    let next_angle = |ring: &[(usize, f64)], i: usize| if i + 1 < ring.len() { ring[i + 1].1 } else { 2.0 * PI };
    let (na, nb) = (inner.len(), outer.len());
    let (mut i, mut j) = (0, 0);
    while i < na || j < nb {
        let advance_inner = j == nb || (i < na && next_angle(inner, i) <= next_angle(outer, j) + 1e-12);
        if advance_inner {
            cells.extend_from_slice(&[inner[i].0, inner[(i + 1) % na].0, outer[j % nb].0]);
            i += 1;
        } else {
            cells.extend_from_slice(&[inner[i % na].0, outer[(j + 1) % nb].0, outer[j].0]);
            j += 1;
        }
    }
}

/// Concentric-ring disk mesh: ring `j` carries `6 j` vertices.
fn polar_disk(radius: f64, rings: usize) -> Result<Mesh> {
    let mut coords = vec![0.0, 0.0];
    let mut loops: Vec<Vec<(usize, f64)>> = Vec::new();
    for j in 1..=rings {
        let r = radius * j as f64 / rings as f64;
        let count = 6 * j;
        let ring = (0..count)
            .map(|k| {
                let theta = 2.0 * PI * k as f64 / count as f64;
                let id = coords.len() / 2;
                coords.push(r * theta.cos());
                coords.push(r * theta.sin());
                (id, theta)
            })
            .collect();
        loops.push(ring);
    }
    let mut cells = Vec::new();
    let first = &loops[0];
    for k in 0..first.len() {
        cells.extend_from_slice(&[0, first[k].0, first[(k + 1) % first.len()].0]);
    }
    for pair in loops.windows(2) {
        zip_loops(&pair[0], &pair[1], &mut cells);
    }
    let nv = coords.len() / 2;
    let mut tags = vec![None; nv];
    for &(v, _) in loops.last().unwrap() {
        tags[v] = Some(0);
    }
    let surfaces = vec![Surface::Circle { center: [0.0, 0.0], radius }];
    Mesh::from_raw(2, coords, cells, surfaces, tags)
}

/// Polar grid between two circles with `layers` radial layers and `count`
/// vertices per ring.
fn polar_annulus(inner: f64, outer: f64, layers: usize, count: usize) -> Result<Mesh> {
    let mut coords = Vec::new();
    let mut loops: Vec<Vec<(usize, f64)>> = Vec::new();
    for j in 0..=layers {
        let r = inner + (outer - inner) * j as f64 / layers as f64;
        let ring = (0..count)
            .map(|k| {
                let theta = 2.0 * PI * k as f64 / count as f64;
                let id = coords.len() / 2;
                coords.push(r * theta.cos());
                coords.push(r * theta.sin());
                (id, theta)
            })
            .collect();
        loops.push(ring);
    }
    let mut cells = Vec::new();
    for pair in loops.windows(2) {
        zip_loops(&pair[0], &pair[1], &mut cells);
    }
    let nv = coords.len() / 2;
    let mut tags = vec![None; nv];
    for &(v, _) in &loops[0] {
        tags[v] = Some(0);
    }
    for &(v, _) in &loops[layers] {
        tags[v] = Some(1);
    }
    let surfaces = vec![
        Surface::Circle { center: [0.0, 0.0], radius: inner },
        Surface::Circle { center: [0.0, 0.0], radius: outer },
    ];
    Mesh::from_raw(2, coords, cells, surfaces, tags)
}

/// Unit cube minus a vertical cylinder: a 2D O-grid between the circle and
/// the square boundary, extruded in `layers_z` prism layers, each prism cut
/// into three tetrahedra by the minimum-index diagonal rule (conforming
/// across shared quadrilateral faces).
fn cylinder_hole_prisms(radius: f64, count: usize, layers_r: usize, layers_z: usize) -> Result<Mesh> {
    assert!(count % 8 == 0, "angular count must resolve the square corners");
    let c = [0.5, 0.5];
    let mut xy = Vec::new();
    let mut loops: Vec<Vec<(usize, f64)>> = Vec::new();
    for j in 0..=layers_r {
        let s = j as f64 / layers_r as f64;
        let ring = (0..count)
            .map(|k| {
                let theta = 2.0 * PI * k as f64 / count as f64;
                let (ct, st) = (theta.cos(), theta.sin());
                let to_square = 0.5 / ct.abs().max(st.abs());
                let r = radius + s * (to_square - radius);
                let id = xy.len() / 2;
                xy.push(c[0] + r * ct);
                xy.push(c[1] + r * st);
                (id, theta)
            })
            .collect();
        loops.push(ring);
    }
    // snap square-boundary points exactly onto the faces
    for &(v, _) in &loops[layers_r] {
        for k in 0..2 {
            let x = &mut xy[2 * v + k];
            for target in [0.0, 1.0] {
                if (*x - target).abs() < 1e-12 {
                    *x = target;
                }
            }
        }
    }
    let mut tris = Vec::new();
    for pair in loops.windows(2) {
        zip_loops(&pair[0], &pair[1], &mut tris);
    }
    let n2 = xy.len() / 2;
    let mut coords = Vec::with_capacity(3 * n2 * (layers_z + 1));
    for k in 0..=layers_z {
        let z = k as f64 / layers_z as f64;
        for v in 0..n2 {
            coords.extend_from_slice(&[xy[2 * v], xy[2 * v + 1], z]);
        }
    }
    let mut cells = Vec::new();
    for k in 0..layers_z {
        for t in tris.chunks(3) {
            let bottom = [t[0] + k * n2, t[1] + k * n2, t[2] + k * n2];
            let top = [bottom[0] + n2, bottom[1] + n2, bottom[2] + n2];
            split_prism(bottom, top, &mut cells);
        }
    }
    let mut tags = vec![None; coords.len() / 3];
    for k in 0..=layers_z {
        for &(v, _) in &loops[0] {
            tags[v + k * n2] = Some(0);
        }
    }
    let surfaces = vec![Surface::Cylinder {
        point: [c[0], c[1], 0.0],
        direction: [0.0, 0.0, 1.0],
        radius,
    }];
    Mesh::from_raw(3, coords, cells, surfaces, tags)
}

/// Splits the prism `bottom[i] -> top[i]` into three tetrahedra. Each
/// quadrilateral face is cut along the diagonal through its smallest vertex
/// index, so neighbouring prisms agree on shared faces.
fn split_prism(bottom: [usize; 3], top: [usize; 3], cells: &mut Vec<usize>) {
    let all = [bottom[0], bottom[1], bottom[2], top[0], top[1], top[2]];
    let pos = (0..6).min_by_key(|&k| all[k]).unwrap();
    // relabel so that the minimum sits at v0 of the bottom triangle
    let (b, t) = if pos < 3 { (bottom, top) } else { (top, bottom) };
    let r = pos % 3;
    let v = [b[r], b[(r + 1) % 3], b[(r + 2) % 3], t[r], t[(r + 1) % 3], t[(r + 2) % 3]];
    if v[1].min(v[5]) < v[2].min(v[4]) {
        cells.extend_from_slice(&[v[0], v[1], v[2], v[5], v[0], v[1], v[5], v[4], v[0], v[4], v[5], v[3]]);
    } else {
        cells.extend_from_slice(&[v[0], v[1], v[2], v[4], v[0], v[4], v[2], v[5], v[0], v[4], v[5], v[3]]);
    }
}

/// Kuhn grid of `[-R, R]^3` with `n` cells per side, mapped radially so that
/// each cube shell `|x|_inf = s` lands on the sphere `|x|_2 = s`.
///
/// The Kuhn diagonal is mirrored into each octant so that it always points
/// away from the centre. Every tetrahedron then keeps its innermost vertex off
/// the surface; the unmirrored grid has tets with all four vertices on the
/// sphere near the cube corners, which the mapping flattens into slivers.
fn mapped_ball(radius: f64, n: usize) -> Result<Mesh> {
    assert!(n % 2 == 0, "ball grid needs an even cell count");
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let h = 2.0 * radius / n as f64;
    let (mut coords, _) = kuhn_grid(n, [-radius; 3], h, |_| false);
    let m = n + 1;
    let idx = |c: [usize; 3]| (c[2] * m + c[1]) * m + c[0];
    let mut cells = Vec::with_capacity(24 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let voxel = [i, j, k];
                let outward = voxel.map(|x| x >= n / 2);
                for perm in PERMS {
                    let mut c = [0; 3];
                    for a in 0..3 {
                        c[a] = if outward[a] { voxel[a] } else { voxel[a] + 1 };
                    }
                    cells.push(idx(c));
                    for &axis in &perm {
                        if outward[axis] {
                            c[axis] += 1;
                        } else {
                            c[axis] -= 1;
                        }
                        cells.push(idx(c));
                    }
                }
            }
        }
    }
    for p in coords.chunks_mut(3) {
        let inf = p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let two = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if two > 0.0 {
            for x in p.iter_mut() {
                *x *= inf / two;
            }
        }
    }
    let nv = coords.len() / 3;
    let mut tags = vec![None; nv];
    for (v, p) in coords.chunks(3).enumerate() {
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if (r - radius).abs() < 1e-12 * radius {
            tags[v] = Some(0);
        }
    }
    let surfaces = vec![Surface::Sphere { center: [0.0; 3], radius }];
    Mesh::from_raw(3, coords, cells, surfaces, tags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_quarter_grid_counts() {
        let m = generate(&DomainSpec::from_name("square").unwrap(), -1).unwrap();
        assert_eq!(m.n_vertices(), 25);
        assert_eq!(m.n_cells(), 32);
        assert_eq!(m.n_boundary_vertices(), 16);
    }

    #[test]
    fn cube_half_grid_counts() {
        let m = generate(&DomainSpec::from_name("cube").unwrap(), -2).unwrap();
        assert_eq!(m.n_vertices(), 27);
        assert_eq!(m.n_cells(), 48);
        assert!((m.volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lshape_removes_a_quadrant() {
        let spec = DomainSpec::from_name("lshape").unwrap();
        let m = generate(&spec, -1).unwrap();
        assert_eq!(m.n_cells(), 24);
        assert_eq!(m.n_vertices(), 21);
        assert!((m.volume() - 0.75).abs() < 1e-14);
    }

    #[test]
    fn disk_base_is_polar() {
        let spec = DomainSpec::from_name("disk").unwrap();
        let m = generate(&spec, 0).unwrap();
        assert_eq!(m.n_vertices(), 1 + 3 * 4 * 5);
        assert_eq!(m.n_cells(), 6 * 16);
        assert_eq!(m.n_boundary_vertices(), 24);
        for v in 0..m.n_vertices() {
            if m.is_boundary(v) {
                assert_eq!(m.surface_tag(v), Some(0));
            }
        }
    }

    #[test]
    fn annulus_has_two_boundary_circles() {
        let spec = DomainSpec::from_name("annulus").unwrap();
        let m = generate(&spec, 0).unwrap();
        assert_eq!(m.n_boundary_vertices(), 48);
        assert_eq!(m.n_cells(), 2 * 2 * 24);
        assert!(m.volume() < spec.exact_volume() + 1e-12 || m.volume() > 0.0);
    }

    #[test]
    fn cylinder_hole_and_cavity_are_valid() {
        for name in ["cube_cylinder_hole", "cube_cavity", "ball"] {
            let spec = DomainSpec::from_name(name).unwrap();
            let m = generate(&spec, spec.min_level().max(-1)).unwrap();
            let rel = (m.volume() - spec.exact_volume()).abs() / spec.exact_volume();
            assert!(rel < 0.2, "{name}: volume {} vs {}", m.volume(), spec.exact_volume());
            assert!(m.min_quality() > 0.02, "{name}: quality {}", m.min_quality());
        }
    }

    #[test]
    fn cavity_at_quarter_resolution() {
        let spec = DomainSpec::from_name("cube_cavity").unwrap();
        let m = generate(&spec, -1).unwrap();
        assert_eq!(m.n_cells(), 6 * (64 - 8));
        assert!((m.volume() - 0.875).abs() < 1e-14);
        assert!(generate(&spec, -2).is_err());
    }

    #[test]
    fn levels_below_support_are_rejected() {
        let spec = DomainSpec::from_name("disk").unwrap();
        assert!(generate(&spec, -1).is_err());
        assert!(DomainSpec::from_name("torus").is_err());
        assert!(DomainSpec::Annulus { inner: 0.5, outer: 0.25 }.validate().is_err());
    }
}
