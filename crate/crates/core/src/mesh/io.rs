use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::Mesh;
use crate::error::{Error, Result};

/// What `read_mesh` had to repair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReadReport {
    /// Cells given with negative orientation and flipped on load.
    pub reoriented_cells: usize,
    /// Vertices whose stored boundary flag disagrees with the facet topology.
    pub flag_mismatches: usize,
}

/// Serializes a mesh to the plain text format.
///
/// Coordinates are written with the shortest representation that parses back
/// to the same `f64`, so `read_mesh(write_mesh(m))` is exact.
pub fn format_mesh(mesh: &Mesh) -> String {
    let dim = mesh.dim();
    let mut out = String::with_capacity(32 * (mesh.n_vertices() + mesh.n_cells()));
    let _ = writeln!(out, "{} {} {}", dim, mesh.n_vertices(), mesh.n_cells());
    for v in 0..mesh.n_vertices() {
        for x in mesh.point(v) {
            let _ = write!(out, "{x:?} ");
        }
        let _ = writeln!(out, "{}", mesh.is_boundary(v) as u8);
    }
    for cell in mesh.cells() {
        let line: Vec<String> = cell.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_mesh(mesh))?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<(Mesh, ReadReport)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text, path)
}

/// Parses mesh text; `path` is only used in error messages.
pub fn parse_mesh(text: &str, path: &Path) -> Result<(Mesh, ReadReport)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("")))
        .filter(|(_, l)| !l.trim().is_empty());

    let err = |line: usize, column: usize, message: String| Error::MeshParse {
        path: PathBuf::from(path),
        line,
        column,
        message,
    };
    let tokens = |line: usize, l: &str| -> Vec<(usize, usize, String)> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, ch) in l.char_indices().chain(std::iter::once((l.len(), ' '))) {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    out.push((line, s + 1, l[s..i].to_string()));
                    start = None;
                }
                _ => {}
            }
        }
        out
    };
    let mut next_row = |want: usize, what: &str| -> Result<Vec<(usize, usize, String)>> {
        let last = text.lines().count().max(1);
        let (no, l) = lines
            .next()
            .ok_or_else(|| err(last, 1, format!("unexpected end of file, expected {what}")))?;
        let t = tokens(no, l);
        if t.len() != want {
            let col = t.get(want).map_or(l.len() + 1, |x| x.1);
            return Err(err(no, col, format!("expected {want} fields for {what}, found {}", t.len())));
        }
        Ok(t)
    };
    fn parse<T: std::str::FromStr>(
        tok: &(usize, usize, String),
        what: &str,
        err: &dyn Fn(usize, usize, String) -> Error,
    ) -> Result<T> {
        let (line, column, text) = tok;
        text.parse()
            .map_err(|_| err(*line, *column, format!("cannot parse `{text}` as {what}")))
    }

    let header = next_row(3, "header `dim n_v n_cells`")?;
    let dim: usize = parse(&header[0], "dimension", &err)?;
    if dim != 2 && dim != 3 {
        return Err(err(header[0].0, header[0].1, format!("dimension must be 2 or 3, got {dim}")));
    }
    let nv: usize = parse(&header[1], "vertex count", &err)?;
    let nc: usize = parse(&header[2], "cell count", &err)?;

    let mut coords = Vec::with_capacity(nv * dim);
    let mut flags = Vec::with_capacity(nv);
    for _ in 0..nv {
        let row = next_row(dim + 1, "vertex")?;
        for tok in &row[..dim] {
            let x: f64 = parse(tok, "coordinate", &err)?;
            if !x.is_finite() {
                return Err(err(tok.0, tok.1, "coordinate is not finite".into()));
            }
            coords.push(x);
        }
        let flag = &row[dim];
        flags.push(match flag.2.as_str() {
            "0" => false,
            "1" => true,
            other => return Err(err(flag.0, flag.1, format!("boundary flag must be 0 or 1, got `{other}`"))),
        });
    }
    let mut cells = Vec::with_capacity(nc * (dim + 1));
    for _ in 0..nc {
        let row = next_row(dim + 1, "cell")?;
        for tok in &row {
            let v: usize = parse(tok, "vertex index", &err)?;
            if v >= nv {
                return Err(err(tok.0, tok.1, format!("vertex index {v} out of range (n_v = {nv})")));
            }
            cells.push(v);
        }
    }
    if let Some((no, l)) = lines.next() {
        return Err(err(no, l.len() - l.trim_start().len() + 1, "trailing data after last cell".into()));
    }

    let (mesh, reoriented_cells) = Mesh::from_parts(dim, coords, cells)?;
    let flag_mismatches = flags
        .iter()
        .zip(mesh.boundary_flags())
        .filter(|(a, b)| a != b)
        .count();
    if reoriented_cells > 0 {
        log::warn!("{}: reoriented {reoriented_cells} negatively oriented cells", path.display());
    }
    if flag_mismatches > 0 {
        log::warn!(
            "{}: {flag_mismatches} boundary flags disagree with the mesh topology; using topology",
            path.display()
        );
    }
    Ok((mesh, ReadReport { reoriented_cells, flag_mismatches }))
}
