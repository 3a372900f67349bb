use super::camera::{CameraBasis, CameraPose};
use super::frame::DepthFrame;
use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::sim::{TriMesh, Vec3};

/// Image size and camera intrinsics shared by every renderer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewport {
    pub width: usize,
    pub height: usize,
}

/// Precomputed pixel-ray generator for one camera.
pub struct RayGrid {
    basis: CameraBasis,
    width: usize,
    height: usize,
    tan_half: f64,
    aspect: f64,
}

impl RayGrid {
    pub fn new(camera: &CameraPose, viewport: Viewport) -> Self {
        Self {
            basis: camera.basis(),
            width: viewport.width,
            height: viewport.height,
            tan_half: (camera.fov_deg.to_radians() / 2.0).tan(),
            aspect: viewport.width as f64 / viewport.height as f64,
        }
    }

    pub fn origin(&self) -> Vec3 {
        self.basis.origin
    }

    /// Unit direction through the centre of pixel `(row, col)`.
    pub fn direction(&self, row: usize, col: usize) -> Vec3 {
        let sx = ((col as f64 + 0.5) / self.width as f64 * 2.0 - 1.0) * self.tan_half * self.aspect;
        let sy = (1.0 - (row as f64 + 0.5) / self.height as f64 * 2.0) * self.tan_half;
        (self.basis.forward + self.basis.right * sx + self.basis.up * sy).normalize()
    }

    /// Continuous `(row, col)` image coordinates of a world point, or `None`
    /// when the point is not in front of the camera.
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64)> {
        let d = p - self.basis.origin;
        let z = d.dot(&self.basis.forward);
        if !(z > 1e-9) {
            return None;
        }
        let sx = d.dot(&self.basis.right) / z / (self.tan_half * self.aspect);
        let sy = d.dot(&self.basis.up) / z / self.tan_half;
        let col = (sx + 1.0) / 2.0 * self.width as f64 - 0.5;
        let row = (1.0 - sy) / 2.0 * self.height as f64 - 0.5;
        Some((row, col))
    }
}

/// Möller–Trumbore, double-sided. Returns the ray parameter of the hit.
pub fn ray_triangle(origin: &Vec3, dir: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t > 1e-9).then_some(t)
}

/// A depth renderer: one strategy for turning a mesh into a depth image.
pub trait DepthRenderer: Send + Sync {
    fn name(&self) -> &'static str;

    /// Depth along each pixel ray to the nearest triangle, `0.0` on a miss.
    fn render(&self, positions: &[Vec3], faces: &[[usize; 3]], rays: &RayGrid) -> Vec<f32>;
}

/// Tests every pixel ray against every triangle.
pub struct BruteForceRaycast;

/// Projects each triangle, then ray-tests only the pixels inside its
/// screen-space bounding box, keeping the nearest hit per pixel.
pub struct BinnedRaster;

impl DepthRenderer for BruteForceRaycast {
    fn name(&self) -> &'static str {
        "raycast"
    }

    fn render(&self, positions: &[Vec3], faces: &[[usize; 3]], rays: &RayGrid) -> Vec<f32> {
        let origin = rays.origin();
        let mut out = vec![0.0f32; rays.width * rays.height];
        for row in 0..rays.height {
            for col in 0..rays.width {
                let dir = rays.direction(row, col);
                let nearest = faces
                    .iter()
                    .filter_map(|f| {
                        ray_triangle(&origin, &dir, &positions[f[0]], &positions[f[1]], &positions[f[2]])
                    })
                    .fold(f64::INFINITY, f64::min);
                if nearest.is_finite() {
                    out[row * rays.width + col] = nearest as f32;
                }
            }
        }
        out
    }
}

impl DepthRenderer for BinnedRaster {
    fn name(&self) -> &'static str {
        "raster"
    }

    fn render(&self, positions: &[Vec3], faces: &[[usize; 3]], rays: &RayGrid) -> Vec<f32> {
        let (w, h) = (rays.width, rays.height);
        let origin = rays.origin();
        let mut zbuf = vec![f64::INFINITY; w * h];
        for f in faces {
            let (a, b, c) = (&positions[f[0]], &positions[f[1]], &positions[f[2]]);
            let projected = [rays.project(a), rays.project(b), rays.project(c)];
            let (r0, r1, c0, c1) = if projected.iter().all(Option::is_some) {
                let pts: Vec<(f64, f64)> = projected.iter().flatten().copied().collect();
                let rmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
                let rmax = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
                let cmin = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
                let cmax = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
                if rmax < -1.0 || cmax < -1.0 || rmin > h as f64 || cmin > w as f64 {
                    continue;
                }
                let lo = |x: f64| (x.floor() - 1.0).max(0.0) as usize;
                let hi = |x: f64, n: usize| ((x.ceil() + 1.0).max(0.0) as usize).min(n - 1);
                (lo(rmin), hi(rmax, h), lo(cmin), hi(cmax, w))
            } else {
                // straddles the camera plane; fall back to the whole image
                (0, h - 1, 0, w - 1)
            };
            for row in r0..=r1 {
                for col in c0..=c1 {
                    let dir = rays.direction(row, col);
                    if let Some(t) = ray_triangle(&origin, &dir, a, b, c) {
                        let slot = &mut zbuf[row * w + col];
                        if t < *slot {
                            *slot = t;
                        }
                    }
                }
            }
        }
        zbuf.into_iter()
            .map(|t| if t.is_finite() { t as f32 } else { 0.0 })
            .collect()
    }
}

pub fn renderers() -> Registry<dyn DepthRenderer> {
    Registry::<dyn DepthRenderer>::new("renderer")
        .with("raster", || Box::new(BinnedRaster))
        .with("raycast", || Box::new(BruteForceRaycast))
}

/// Renders `mesh` from `camera`. Fails on an empty mesh or when the camera
/// sits inside the mesh bounding box.
pub fn render_with(
    renderer: &dyn DepthRenderer,
    mesh: &TriMesh,
    camera: &CameraPose,
    viewport: Viewport,
    frame_index: usize,
) -> Result<DepthFrame> {
    if mesh.positions.is_empty() || mesh.faces.is_empty() {
        return Err(Error::InvalidInput("cannot render an empty mesh".into()));
    }
    if viewport.width == 0 || viewport.height == 0 {
        return Err(Error::InvalidInput("viewport must be non-empty".into()));
    }
    let (lo, hi) = mesh.bounds();
    let p = camera.position;
    if (0..3).all(|k| p[k] >= lo[k] && p[k] <= hi[k]) {
        return Err(Error::InvalidInput(format!(
            "camera at ({:.3}, {:.3}, {:.3}) is inside the mesh bounds",
            p.x, p.y, p.z
        )));
    }
    let rays = RayGrid::new(camera, viewport);
    Ok(DepthFrame {
        width: viewport.width,
        height: viewport.height,
        depth: renderer.render(&mesh.positions, &mesh.faces, &rays),
        camera: camera.clone(),
        frame_index,
    })
}
