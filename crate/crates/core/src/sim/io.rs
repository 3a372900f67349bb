//! Plain-text mesh snapshots: a `verts N faces M` header, then `N` lines of
//! `x y z`, then `M` lines of 0-based `i j k`.

use std::fmt::Write as _;
use std::path::Path;

use super::{TriMesh, Vec3};
use crate::error::{Error, Result};

pub fn mesh_to_text(positions: &[Vec3], faces: &[[usize; 3]]) -> String {
    let mut out = String::with_capacity(32 * (positions.len() + faces.len()));
    let _ = writeln!(out, "verts {} faces {}", positions.len(), faces.len());
    for p in positions {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    for f in faces {
        let _ = writeln!(out, "{} {} {}", f[0], f[1], f[2]);
    }
    out
}

pub fn parse_mesh_text(text: &str) -> std::result::Result<(Vec<Vec3>, Vec<[usize; 3]>), String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or("empty file")?.split_whitespace().collect();
    let (n, m) = match header.as_slice() {
        ["verts", n, "faces", m] => (
            n.parse::<usize>().map_err(|e| e.to_string())?,
            m.parse::<usize>().map_err(|e| e.to_string())?,
        ),
        _ => return Err("header must be `verts N faces M`".into()),
    };
    let mut positions = Vec::with_capacity(n);
    for i in 0..n {
        let line = lines.next().ok_or(format!("missing vertex line {i}"))?;
        let v: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| format!("vertex {i}: {e}"))?;
        if v.len() != 3 {
            return Err(format!("vertex {i}: expected 3 coordinates"));
        }
        positions.push(Vec3::new(v[0], v[1], v[2]));
    }
    let mut faces = Vec::with_capacity(m);
    for i in 0..m {
        let line = lines.next().ok_or(format!("missing face line {i}"))?;
        let f: Vec<usize> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| format!("face {i}: {e}"))?;
        if f.len() != 3 || f.iter().any(|&k| k >= n) {
            return Err(format!("face {i}: expected 3 valid vertex indices"));
        }
        faces.push([f[0], f[1], f[2]]);
    }
    if lines.next().is_some() {
        return Err("trailing content after faces".into());
    }
    Ok((positions, faces))
}

pub fn write_mesh(path: &Path, mesh: &TriMesh) -> Result<()> {
    std::fs::write(path, mesh_to_text(&mesh.positions, &mesh.faces)).map_err(|e| Error::io(path, e))
}

pub fn read_mesh(path: &Path) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh_text(&text).map_err(|msg| Error::format(path, msg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{build_grid_mesh, PinnedEdge};
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let m = build_grid_mesh(2, 1.0, 0.1, PinnedEdge::Top).unwrap();
        let text = mesh_to_text(&m.positions, &m.faces);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "verts 9 faces 8");
        assert_eq!(lines.len(), 1 + 9 + 8);
        assert_eq!(lines[9 + 1], "0 3 1");
    }

    #[test]
    fn rejects_bad_index() {
        assert!(parse_mesh_text("verts 1 faces 1\n0 0 0\n0 1 2\n").is_err());
        assert!(parse_mesh_text("vertices 1\n").is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip(coords in prop::collection::vec(-1e3f64..1e3, 9)) {
            let p: Vec<Vec3> = coords.chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
            let f = vec![[0, 1, 2]];
            let (p2, f2) = parse_mesh_text(&mesh_to_text(&p, &f)).unwrap();
            prop_assert_eq!(p2, p);
            prop_assert_eq!(f2, f);
        }
    }
}
