//! Depth rendering of cloth snapshots from pinhole cameras.

mod camera;
mod frame;
mod raster;

use serde::{Deserialize, Serialize};

pub use camera::{sample_camera_pose, CameraBasis, CameraPose, CameraRanges, DEFAULT_FOV_DEG};
pub use frame::{
    decode_depth, encode_depth, normalize_depth, read_frame, sidecar_path, write_frame, DepthBounds,
    DepthFrame, FrameMeta, FOREGROUND_FLOOR, FRAME_EXTENSION, FRAME_SIZE,
};
pub use raster::{
    ray_triangle, render_with, renderers, BinnedRaster, BruteForceRaycast, DepthRenderer, RayGrid,
    Viewport,
};

use crate::error::Result;
use crate::sim::TriMesh;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    pub bounds: DepthBounds,
    /// Name of a registered [`DepthRenderer`].
    pub renderer: String,
    pub cameras: CameraRanges,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            width: FRAME_SIZE,
            height: FRAME_SIZE,
            bounds: DepthBounds::default(),
            renderer: "raster".into(),
            cameras: CameraRanges::default(),
        }
    }
}

impl RenderConfig {
    pub fn viewport(&self) -> Viewport {
        Viewport {
            width: self.width,
            height: self.height,
        }
    }

    pub fn render(&self, mesh: &TriMesh, camera: &CameraPose, frame_index: usize) -> Result<DepthFrame> {
        let renderer = renderers().create(&self.renderer)?;
        render_with(renderer.as_ref(), mesh, camera, self.viewport(), frame_index)
    }
}

/// Renders a 256x256 depth frame with the default renderer.
pub fn render_depth(mesh: &TriMesh, camera: &CameraPose) -> Result<DepthFrame> {
    RenderConfig::default().render(mesh, camera, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{build_grid_mesh, PinnedEdge, TriMesh, Vec3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quad(size: f64, x: f64) -> TriMesh {
        let h = size / 2.0;
        TriMesh::from_parts(
            vec![
                Vec3::new(x, 0.5 - h, -h),
                Vec3::new(x, 0.5 + h, -h),
                Vec3::new(x, 0.5 + h, h),
                Vec3::new(x, 0.5 - h, h),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![1.0; 4],
            vec![false; 4],
        )
        .unwrap()
    }

    fn small(renderer: &str) -> RenderConfig {
        RenderConfig {
            width: 48,
            height: 40,
            renderer: renderer.into(),
            ..RenderConfig::default()
        }
    }

    #[test]
    fn plane_filling_frame_reads_its_distance() {
        let d = 2.5;
        let mesh = quad(20.0, 0.0);
        let cam = CameraPose::facing_cloth(Vec3::new(d, 0.5, 0.0));
        let frame = render_depth(&mesh, &cam).unwrap();
        assert_eq!((frame.width, frame.height), (256, 256));
        assert_eq!(frame.foreground_count(), 256 * 256);
        // centre pixels look almost straight ahead
        let centre = frame.at(128, 128) as f64;
        assert!((centre - d).abs() / d < 1e-4);
        // off-axis pixels read the slant distance
        let rays = RayGrid::new(&cam, Viewport { width: 256, height: 256 });
        let dir = rays.direction(10, 200);
        let expected = d / dir.dot(&Vec3::new(-1.0, 0.0, 0.0));
        assert!((frame.at(10, 200) as f64 - expected).abs() / expected < 1e-6);
    }

    #[test]
    fn nothing_in_view_renders_background() {
        let mesh = quad(1.0, 5.0); // behind a camera at x=2 looking along -x
        let cam = CameraPose::facing_cloth(Vec3::new(2.0, 0.5, 0.0));
        let frame = small("raster").render(&mesh, &cam, 0).unwrap();
        assert!(frame.depth.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn camera_inside_bounds_is_rejected() {
        let mut mesh = build_grid_mesh(4, 1.0, 0.1, PinnedEdge::Top).unwrap();
        mesh.positions[6].x = 1.0;
        mesh.positions[7].x = -1.0;
        let cam = CameraPose::facing_cloth(Vec3::new(0.2, 0.5, 0.0));
        assert!(small("raster").render(&mesh, &cam, 0).is_err());
    }

    /// Hit test by explicit plane intersection and edge-side signs, kept
    /// separate from Möller–Trumbore. Returns `None` for rays grazing an
    /// edge, where either answer is acceptable.
    fn oracle_hit(o: &Vec3, d: &Vec3, tri: &[Vec3; 3]) -> Option<bool> {
        let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
        let denom = n.dot(d);
        if denom.abs() < 1e-12 {
            return Some(false);
        }
        let t = n.dot(&(tri[0] - o)) / denom;
        if t <= 0.0 {
            return Some(false);
        }
        let p = o + d * t;
        let mut signs = [0.0; 3];
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            signs[k] = (b - a).cross(&(p - a)).dot(&n) / n.norm() / (b - a).norm();
        }
        if signs.iter().any(|s| s.abs() < 1e-9) {
            return None;
        }
        Some(signs.iter().all(|s| *s > 0.0) || signs.iter().all(|s| *s < 0.0))
    }

    #[test]
    fn single_triangle_hits_match_exhaustive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let tri: [Vec3; 3] = std::array::from_fn(|_| {
                Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(0.0..1.0), rng.random_range(-0.5..0.5))
            });
            let mesh = TriMesh::from_parts(tri.to_vec(), vec![[0, 1, 2]], vec![1.0; 3], vec![false; 3]).unwrap();
            let mut cam = CameraPose::facing_cloth(Vec3::new(2.0, 0.5, rng.random_range(-0.5..0.3)));
            cam.rotation_deg.z = rng.random_range(-260.0..280.0);
            for name in ["raster", "raycast"] {
                let cfg = small(name);
                let frame = cfg.render(&mesh, &cam, 0).unwrap();
                let rays = RayGrid::new(&cam, cfg.viewport());
                for row in 0..cfg.height {
                    for col in 0..cfg.width {
                        let hit = frame.at(row, col) != 0.0;
                        if let Some(expected) = oracle_hit(&rays.origin(), &rays.direction(row, col), &tri) {
                            assert_eq!(hit, expected, "{name} pixel ({row}, {col})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn raster_and_raycast_agree_on_cloth() {
        let mut mesh = build_grid_mesh(6, 1.0, 0.2, PinnedEdge::Top).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for p in mesh.positions.iter_mut() {
            p.x += rng.random_range(-0.2..0.2);
        }
        let mut cam = CameraPose::facing_cloth(Vec3::new(1.8, 0.5, -0.2));
        cam.rotation_deg.z = 33.0;
        let a = small("raster").render(&mesh, &cam, 0).unwrap();
        let b = small("raycast").render(&mesh, &cam, 0).unwrap();
        assert_eq!(a.depth, b.depth);
        assert!(a.foreground_count() > 100);
    }

    #[test]
    fn depth_is_translation_invariant() {
        let mut mesh = build_grid_mesh(5, 1.0, 0.2, PinnedEdge::Top).unwrap();
        for (i, p) in mesh.positions.iter_mut().enumerate() {
            p.x = 0.1 * (i as f64 * 0.37).sin();
        }
        let cam = CameraPose::facing_cloth(Vec3::new(2.2, 0.4, 0.1));
        let shift = Vec3::new(0.3, -1.7, 2.4);
        let mut moved = mesh.clone();
        for p in moved.positions.iter_mut() {
            *p += shift;
        }
        let cfg = small("raster");
        let a = cfg.render(&mesh, &cam, 0).unwrap();
        let b = cfg.render(&moved, &cam.translated(&shift), 0).unwrap();
        for (x, y) in a.depth.iter().zip(&b.depth) {
            assert!((x - y).abs() <= 1e-6 * x.max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn foreground_not_closer_than_bounding_box() {
        let mesh = build_grid_mesh(5, 1.0, 0.2, PinnedEdge::Top).unwrap();
        let cam = CameraPose::facing_cloth(Vec3::new(1.5, 0.1, 0.3));
        let (lo, hi) = mesh.bounds();
        let nearest = cam.position.sup(&lo).inf(&hi);
        let min_dist = (cam.position - nearest).norm() as f32;
        let frame = small("raster").render(&mesh, &cam, 0).unwrap();
        assert!(frame.foreground_count() > 0);
        for d in frame.depth.iter().filter(|d| **d != 0.0) {
            assert!(*d >= min_dist * (1.0 - 1e-6));
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let mesh = build_grid_mesh(5, 1.0, 0.2, PinnedEdge::Top).unwrap();
        let cam = CameraPose::facing_cloth(Vec3::new(3.0, 0.5, 0.0));
        let cfg = small("raster");
        assert_eq!(cfg.render(&mesh, &cam, 0).unwrap(), cfg.render(&mesh, &cam, 0).unwrap());
    }
}
