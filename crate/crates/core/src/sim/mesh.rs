use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::{Error, Result};

/// Which side of a grid cloth is held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PinnedEdge {
    #[default]
    Top,
    Bottom,
    Left,
    Right,
    None,
}

/// Interior edge shared by two faces, stored as the four-vertex bending
/// stencil `[wing1, wing2, edge_start, edge_end]`.
///
/// `wing1` is the vertex opposite the edge in `faces[0]`, whose winding
/// traverses `edge_start -> edge_end`; `wing2` belongs to `faces[1]`, which
/// traverses the edge the other way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hinge {
    pub stencil: [usize; 4],
    pub faces: [usize; 2],
    pub rest_length: f64,
    pub rest_angle: f64,
}

impl Hinge {
    pub fn edge(&self) -> [usize; 2] {
        [self.stencil[2], self.stencil[3]]
    }

    pub fn wings(&self) -> [usize; 2] {
        [self.stencil[0], self.stencil[1]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub rest_length: f64,
}

/// Triangle-mesh cloth state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub masses: Vec<f64>,
    pub faces: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    pub hinges: Vec<Hinge>,
    pub pinned: Vec<bool>,
    pub rest_areas: Vec<f64>,
}

pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

impl TriMesh {
    /// Builds a mesh from rest positions and faces. Edge and hinge topology
    /// is derived from the faces; the current positions become the rest
    /// state (rest lengths, rest dihedral angles, rest areas).
    pub fn from_parts(
        positions: Vec<Vec3>,
        faces: Vec<[usize; 3]>,
        masses: Vec<f64>,
        pinned: Vec<bool>,
    ) -> Result<Self> {
        let n = positions.len();
        if n == 0 || faces.is_empty() {
            return Err(Error::InvalidMesh("mesh has no vertices or faces".into()));
        }
        if masses.len() != n || pinned.len() != n {
            return Err(Error::InvalidMesh(format!(
                "{} vertices but {} masses and {} pin flags",
                n,
                masses.len(),
                pinned.len()
            )));
        }
        if let Some(i) = masses.iter().position(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidMesh(format!("vertex {i} has non-positive mass")));
        }
        let mut rest_areas = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMesh(format!("face {fi} references a missing vertex")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {fi} repeats a vertex")));
            }
            let area = triangle_area(&positions[f[0]], &positions[f[1]], &positions[f[2]]);
            if !(area > 0.0) {
                return Err(Error::InvalidMesh(format!("face {fi} has zero area")));
            }
            rest_areas.push(area);
        }

        // undirected edge -> list of (face, directed start, directed end, opposite vertex)
        let mut adjacency: BTreeMap<(usize, usize), Vec<(usize, usize, usize, usize)>> =
            BTreeMap::new();
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b, c) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
                adjacency
                    .entry((a.min(b), a.max(b)))
                    .or_default()
                    .push((fi, a, b, c));
            }
        }

        let mut edges = Vec::with_capacity(adjacency.len());
        let mut hinges = Vec::new();
        for (&(a, b), users) in &adjacency {
            let rest_length = (positions[a] - positions[b]).norm();
            edges.push(Edge {
                vertices: [a, b],
                rest_length,
            });
            match users.as_slice() {
                [_] => {}
                [first, second] => {
                    let (f1, s, e, w1) = *first;
                    let (f2, s2, e2, w2) = *second;
                    if s2 != e || e2 != s {
                        return Err(Error::InvalidMesh(format!(
                            "faces {f1} and {f2} have inconsistent winding"
                        )));
                    }
                    hinges.push(Hinge {
                        stencil: [w1, w2, s, e],
                        faces: [f1, f2],
                        rest_length,
                        rest_angle: 0.0,
                    });
                }
                more => {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({a}, {b}) is shared by {} faces",
                        more.len()
                    )))
                }
            }
        }

        let mut mesh = TriMesh {
            velocities: vec![Vec3::zeros(); n],
            positions,
            masses,
            faces,
            edges,
            hinges,
            pinned,
            rest_areas,
        };
        for h in 0..mesh.hinges.len() {
            let angle = super::dihedral_angle(&mesh, &mesh.hinges[h])?;
            mesh.hinges[h].rest_angle = angle;
        }
        Ok(mesh)
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn total_rest_area(&self) -> f64 {
        self.rest_areas.iter().sum()
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.faces[face];
        triangle_area(&self.positions[a], &self.positions[b], &self.positions[c])
    }

    /// Unit normal following the face winding, or `None` for a degenerate face.
    pub fn face_normal(&self, face: usize) -> Option<Vec3> {
        let [a, b, c] = self.faces[face];
        let p = &self.positions;
        let n = (p[b] - p[a]).cross(&(p[c] - p[a]));
        let len = n.norm();
        (len > 0.0 && len.is_finite()).then(|| n / len)
    }

    /// Mass-weighted centroid.
    pub fn centroid(&self) -> Vec3 {
        let total = self.total_mass();
        self.positions
            .iter()
            .zip(&self.masses)
            .fold(Vec3::zeros(), |acc, (p, m)| acc + p * *m)
            / total
    }

    /// Axis-aligned bounding box `(min, max)` of the current positions.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &self.positions {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    pub fn is_finite(&self) -> bool {
        self.positions
            .iter()
            .chain(&self.velocities)
            .all(|v| v.iter().all(|c| c.is_finite()))
    }
}

/// Regular `n x n` grid cloth of side `size`, hanging in the `x = 0` plane
/// with its centre at `(0, 0.5, 0)`; face normals point along `+x`.
///
/// Vertex `(row, col)` has index `row * (n + 1) + col`; row 0 is the top
/// edge (`z = size / 2`). Masses are lumped from one third of each adjacent
/// face area times `area_weight`.
pub fn build_grid_mesh(
    n: usize,
    size: f64,
    area_weight: f64,
    pinned_edge: PinnedEdge,
) -> Result<TriMesh> {
    if n < 2 {
        return Err(Error::InvalidMesh(format!("grid needs n >= 2, got {n}")));
    }
    if !(size > 0.0) {
        return Err(Error::InvalidMesh(format!("grid size must be positive, got {size}")));
    }
    if !(area_weight > 0.0) {
        return Err(Error::InvalidMesh(format!(
            "area weight must be positive, got {area_weight}"
        )));
    }
    let h = size / n as f64;
    let idx = |r: usize, c: usize| r * (n + 1) + c;
    let mut positions = Vec::with_capacity((n + 1) * (n + 1));
    for r in 0..=n {
        for c in 0..=n {
            positions.push(Vec3::new(
                0.0,
                0.5 - size / 2.0 + c as f64 * h,
                size / 2.0 - r as f64 * h,
            ));
        }
    }
    let mut faces = Vec::with_capacity(2 * n * n);
    for r in 0..n {
        for c in 0..n {
            faces.push([idx(r, c), idx(r + 1, c), idx(r, c + 1)]);
            faces.push([idx(r + 1, c), idx(r + 1, c + 1), idx(r, c + 1)]);
        }
    }
    let mut masses = vec![0.0; positions.len()];
    for f in &faces {
        let m = area_weight * triangle_area(&positions[f[0]], &positions[f[1]], &positions[f[2]]) / 3.0;
        for &v in f {
            masses[v] += m;
        }
    }
    let pinned = (0..positions.len())
        .map(|i| {
            let (r, c) = (i / (n + 1), i % (n + 1));
            match pinned_edge {
                PinnedEdge::Top => r == 0,
                PinnedEdge::Bottom => r == n,
                PinnedEdge::Left => c == 0,
                PinnedEdge::Right => c == n,
                PinnedEdge::None => false,
            }
        })
        .collect();
    TriMesh::from_parts(positions, faces, masses, pinned)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent count: every pair of faces sharing two vertices.
    fn brute_force_interior_edges(faces: &[[usize; 3]]) -> usize {
        let mut count = 0;
        for i in 0..faces.len() {
            for j in (i + 1)..faces.len() {
                let shared = faces[i].iter().filter(|v| faces[j].contains(v)).count();
                if shared == 2 {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn small_grid_counts_and_mass() {
        let m = build_grid_mesh(2, 1.0, 0.1, PinnedEdge::Top).unwrap();
        assert_eq!(m.vertex_count(), 9);
        assert_eq!(m.face_count(), 8);
        assert!((m.total_mass() - 0.1).abs() < 1e-12);
        assert_eq!(m.pinned.iter().filter(|p| **p).count(), 3);
        assert!(m.pinned[0] && m.pinned[1] && m.pinned[2]);
    }

    #[test]
    fn ten_grid_hinges_match_brute_force() {
        let m = build_grid_mesh(10, 1.0, 0.2, PinnedEdge::Top).unwrap();
        assert_eq!(m.vertex_count(), 121);
        assert_eq!(m.face_count(), 200);
        let expected = brute_force_interior_edges(&m.faces);
        assert_eq!(expected, 280);
        assert_eq!(m.hinges.len(), expected);
        // boundary edges are used by one face, interior ones by two
        let boundary = m.edges.len() - m.hinges.len();
        assert_eq!(boundary, 40);
    }

    #[test]
    fn rejects_tiny_grid() {
        assert!(matches!(
            build_grid_mesh(1, 1.0, 0.1, PinnedEdge::Top),
            Err(Error::InvalidMesh(_))
        ));
    }

    #[test]
    fn mass_matches_area_weight() {
        for &(n, size, aw) in &[(3, 0.7, 0.15), (8, 1.0, 0.3), (5, 2.0, 0.11)] {
            let m = build_grid_mesh(n, size, aw, PinnedEdge::None).unwrap();
            let expected = aw * m.total_rest_area();
            assert!((m.total_mass() - expected).abs() <= 1e-9 * expected);
            assert!((m.total_rest_area() - size * size).abs() < 1e-12);
            assert!(m.masses.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn flat_grid_normals_face_plus_x() {
        let m = build_grid_mesh(4, 1.0, 0.1, PinnedEdge::Top).unwrap();
        for f in 0..m.face_count() {
            let n = m.face_normal(f).unwrap();
            assert!((n - Vec3::x()).norm() < 1e-12);
        }
        assert!(m.hinges.iter().all(|h| h.rest_angle == 0.0));
    }

    #[test]
    fn rejects_edge_with_three_faces() {
        let p = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let faces = vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]];
        let err = TriMesh::from_parts(p, faces, vec![1.0; 5], vec![false; 5]);
        assert!(matches!(err, Err(Error::InvalidMesh(_))));
    }
}
