use nalgebra::{Matrix3, Rotation3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::sim::Vec3;

/// Camera placement. `rotation_deg` holds Euler angles applied intrinsically
/// in X, Y, Z order to a camera that looks down its local `-Z` axis with
/// `+Y` up; the result is then turned by a fixed 90° about world `Z` so that
/// rotation `(90, 0, 0)` looks along world `-X`, straight at the cloth
/// hanging in the `x = 0` plane. Rotation about local `Z` therefore rolls
/// the image about the optical axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    /// metres
    pub position: Vec3,
    pub rotation_deg: Vec3,
    /// vertical field of view, degrees
    pub fov_deg: f64,
}

pub const DEFAULT_FOV_DEG: f64 = 60.0;

/// Orthonormal camera frame in world coordinates.
#[derive(Debug, Clone, Copy)]
pub struct CameraBasis {
    pub origin: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
}

impl CameraPose {
    /// Pose looking along `-X` from `position`, no roll.
    pub fn facing_cloth(position: Vec3) -> Self {
        Self {
            position,
            rotation_deg: Vec3::new(90.0, 0.0, 0.0),
            fov_deg: DEFAULT_FOV_DEG,
        }
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        let r = self.rotation_deg.map(f64::to_radians);
        let rx = Rotation3::from_axis_angle(&Vec3::x_axis(), r.x);
        let ry = Rotation3::from_axis_angle(&Vec3::y_axis(), r.y);
        let rz = Rotation3::from_axis_angle(&Vec3::z_axis(), r.z);
        let yaw = Rotation3::from_axis_angle(&Vec3::z_axis(), std::f64::consts::FRAC_PI_2);
        (yaw * rx * ry * rz).into_inner()
    }

    pub fn basis(&self) -> CameraBasis {
        let r = self.rotation();
        CameraBasis {
            origin: self.position,
            right: r.column(0).into_owned(),
            up: r.column(1).into_owned(),
            forward: -r.column(2).into_owned(),
        }
    }

    /// The same pose shifted by `offset`.
    pub fn translated(&self, offset: &Vec3) -> Self {
        Self {
            position: self.position + offset,
            ..self.clone()
        }
    }
}

/// Sampling box for randomised camera poses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraRanges {
    pub x: [f64; 2],
    pub y: f64,
    pub z: [f64; 2],
    pub rot_x: f64,
    pub rot_y: f64,
    pub rot_z: [f64; 2],
    pub fov_deg: f64,
}

impl Default for CameraRanges {
    fn default() -> Self {
        Self {
            x: [1.0, 6.0],
            y: 0.5,
            z: [-0.5, 0.3],
            rot_x: 90.0,
            rot_y: 0.0,
            rot_z: [-260.0, 280.0],
            fov_deg: DEFAULT_FOV_DEG,
        }
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

pub fn sample_camera_pose<R: Rng + ?Sized>(rng: &mut R, ranges: &CameraRanges) -> CameraPose {
    let x = uniform(rng, ranges.x);
    let z = uniform(rng, ranges.z);
    let rz = uniform(rng, ranges.rot_z);
    CameraPose {
        position: Vec3::new(x, ranges.y, z),
        rotation_deg: Vec3::new(ranges.rot_x, ranges.rot_y, rz),
        fov_deg: ranges.fov_deg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_pose_faces_minus_x() {
        let b = CameraPose::facing_cloth(Vec3::new(2.0, 0.5, 0.0)).basis();
        assert!((b.forward - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((b.up - Vec3::z()).norm() < 1e-12);
        assert!((b.right.cross(&b.up) + b.forward).norm() < 1e-12);
    }

    #[test]
    fn rot_z_rolls_about_optical_axis() {
        let mut pose = CameraPose::facing_cloth(Vec3::new(2.0, 0.5, 0.0));
        pose.rotation_deg.z = 137.0;
        let b = pose.basis();
        assert!((b.forward - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((b.up.dot(&Vec3::z()) - 137f64.to_radians().cos()).abs() < 1e-12);
    }

    #[test]
    fn samples_stay_in_ranges() {
        let ranges = CameraRanges::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut xmin, mut xmax, mut zmin, mut zmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for _ in 0..10_000 {
            let p = sample_camera_pose(&mut rng, &ranges);
            xmin = xmin.min(p.position.x);
            xmax = xmax.max(p.position.x);
            zmin = zmin.min(p.position.z);
            zmax = zmax.max(p.position.z);
            assert_eq!(p.position.y, 0.5);
            assert_eq!(p.rotation_deg.x, 90.0);
            assert_eq!(p.rotation_deg.y, 0.0);
            assert!((-260.0..=280.0).contains(&p.rotation_deg.z));
        }
        assert!(xmin >= 1.0 && xmax <= 6.0 && xmax - xmin > 4.9);
        assert!(zmin >= -0.5 && zmax <= 0.3 && zmax - zmin > 0.79);
    }

    #[test]
    fn sampling_is_seeded() {
        let ranges = CameraRanges::default();
        let a = sample_camera_pose(&mut ChaCha8Rng::seed_from_u64(5), &ranges);
        let b = sample_camera_pose(&mut ChaCha8Rng::seed_from_u64(5), &ranges);
        assert_eq!(a, b);
    }
}
