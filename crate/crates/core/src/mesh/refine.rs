use std::collections::HashMap;

use super::Mesh;
use crate::error::Result;

/// Uniform red refinement.
///
/// Triangles split into four through their edge midpoints; tetrahedra into
/// eight, with the inner octahedron cut along its shortest diagonal (ties go
/// to the diagonal with the lowest vertex index). Midpoints of edges lying on
/// a boundary facet whose vertices all carry the same surface tag are
/// projected onto that surface and inherit the tag.
pub fn refine(mesh: &Mesh) -> Result<Mesh> {
    let dim = mesh.dim();
    let nv = mesh.n_vertices();
    let mut coords = mesh.coords().to_vec();
    let mut tags = mesh.surface_tags().to_vec();

    // edge -> midpoint vertex, numbered in cell order
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::with_capacity(mesh.n_cells() * 3);
    let mut edge_of = |a: usize, b: usize, coords: &mut Vec<f64>, tags: &mut Vec<Option<usize>>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoint.entry(key).or_insert_with(|| {
            let id = coords.len() / dim;
            for k in 0..dim {
                let x = 0.5 * (coords[a * dim + k] + coords[b * dim + k]);
                coords.push(x);
            }
            tags.push(None);
            id
        })
    };

    let mut local_mid = Vec::with_capacity(mesh.n_cells());
    for cell in mesh.cells() {
        let mut mids = [0usize; 6];
        let mut n = 0;
        for i in 0..cell.len() {
            for j in i + 1..cell.len() {
                mids[n] = edge_of(cell[i], cell[j], &mut coords, &mut tags);
                n += 1;
            }
        }
        local_mid.push(mids);
    }

    // project midpoints of curved boundary facets
    for facet in mesh.boundary_facets() {
        let Some(tag) = mesh.surface_tag(facet[0]) else { continue };
        if facet.iter().any(|&v| mesh.surface_tag(v) != Some(tag)) {
            continue;
        }
        let surface = mesh.surfaces()[tag];
        for i in 0..facet.len() {
            for j in i + 1..facet.len() {
                let key = (facet[i].min(facet[j]), facet[i].max(facet[j]));
                let m = midpoint[&key];
                if tags[m].is_none() {
                    surface.project(&mut coords[m * dim..(m + 1) * dim]);
                    tags[m] = Some(tag);
                }
            }
        }
    }

    let mut cells = Vec::with_capacity(mesh.n_cells() * (dim + 1) * if dim == 2 { 4 } else { 8 });
    for (cell, mids) in mesh.cells().zip(&local_mid) {
        if dim == 2 {
            // mids: 01, 02, 12
            let (a, b, c) = (cell[0], cell[1], cell[2]);
            let (ab, ac, bc) = (mids[0], mids[1], mids[2]);
            cells.extend_from_slice(&[a, ab, ac, ab, b, bc, ac, bc, c, ab, bc, ac]);
        } else {
            // mids: 01, 02, 03, 12, 13, 23
            let v = [cell[0], cell[1], cell[2], cell[3]];
            let [m01, m02, m03, m12, m13, m23] = *mids;
            cells.extend_from_slice(&[v[0], m01, m02, m03]);
            cells.extend_from_slice(&[m01, v[1], m12, m13]);
            cells.extend_from_slice(&[m02, m12, v[2], m23]);
            cells.extend_from_slice(&[m03, m13, m23, v[3]]);
            // diagonals with the cyclic equator around each
            let options = [
                ((m01, m23), [m02, m03, m13, m12]),
                ((m02, m13), [m01, m03, m23, m12]),
                ((m03, m12), [m01, m02, m23, m13]),
            ];
            let dist = |a: usize, b: usize| -> f64 {
                (0..3).map(|k| (coords[a * 3 + k] - coords[b * 3 + k]).powi(2)).sum::<f64>()
            };
            let ((p, q), eq) = options
                .iter()
                .copied()
                .min_by(|x, y| {
                    let (dx, dy) = (dist(x.0 .0, x.0 .1), dist(y.0 .0, y.0 .1));
                    let tol = 1e-12 * dx.max(dy);
                    if (dx - dy).abs() <= tol {
                        x.0 .0.min(x.0 .1).cmp(&y.0 .0.min(y.0 .1))
                    } else {
                        dx.partial_cmp(&dy).unwrap()
                    }
                })
                .unwrap();
            for k in 0..4 {
                cells.extend_from_slice(&[p, q, eq[k], eq[(k + 1) % 4]]);
            }
        }
    }
    debug_assert_eq!(coords.len() / dim, nv + midpoint_count(mesh));
    let refined = Mesh::new(dim, coords, cells)?;
    let tags = tags
        .into_iter()
        .enumerate()
        .map(|(v, t)| if refined.is_boundary(v) { t } else { None })
        .collect();
    refined.with_surfaces(mesh.surfaces().to_vec(), tags)
}

fn midpoint_count(mesh: &Mesh) -> usize {
    let mut edges = std::collections::HashSet::new();
    for cell in mesh.cells() {
        for i in 0..cell.len() {
            for j in i + 1..cell.len() {
                edges.insert((cell[i].min(cell[j]), cell[i].max(cell[j])));
            }
        }
    }
    edges.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, DomainSpec};

    #[test]
    fn square_refines_by_four() {
        let m = generate(&DomainSpec::from_name("square").unwrap(), -1).unwrap();
        let r = refine(&m).unwrap();
        assert_eq!(r.n_cells(), 128);
        assert_eq!(r.n_vertices(), 81);
        assert!((r.volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cube_refines_by_eight() {
        let m = generate(&DomainSpec::from_name("cube").unwrap(), -2).unwrap();
        let r = refine(&m).unwrap();
        assert_eq!(r.n_cells(), 384);
        assert_eq!(r.n_vertices(), 125);
        assert!((r.volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disk_midpoints_are_projected() {
        let m = generate(&DomainSpec::from_name("disk").unwrap(), 0).unwrap();
        let r = refine(&m).unwrap();
        for v in 0..r.n_vertices() {
            if r.is_boundary(v) {
                let p = r.point(v);
                assert!((p[0].hypot(p[1]) - 0.5).abs() < 1e-14);
            }
        }
        assert!(r.volume() > m.volume());
    }

    #[test]
    fn refined_tetrahedra_keep_quality() {
        let m = generate(&DomainSpec::from_name("cube").unwrap(), -2).unwrap();
        let q0 = m.min_quality();
        let r2 = refine(&refine(&m).unwrap()).unwrap();
        assert!(r2.min_quality() > 0.5 * q0);
    }
}
