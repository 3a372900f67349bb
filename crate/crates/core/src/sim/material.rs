use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bend-angle breakpoints (degrees) for the rows of the bending matrix.
pub const BEND_ANGLES_DEG: [f64; 3] = [0.0, 45.0, 90.0];
pub const BEND_COLUMNS: usize = 5;

pub const STIFFNESS_SCALE_RANGE: (f64, f64) = (0.1, 10.0);

pub type BendMatrix = [[f64; BEND_COLUMNS]; 3];

/// Per-material physical parameters fed to the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Bending stiffness (N·m). Rows are bend angles 0°, 45°, 90°; columns
    /// are curvature measurement points spread uniformly over
    /// `curvature_range`.
    pub bend_matrix: BendMatrix,
    pub stiffness_scale: f64,
    /// kg/m²
    pub area_weight: f64,
    /// N/m, per edge spring
    pub stretch_stiffness: f64,
    /// kg/s for the whole cloth, distributed to vertices by mass fraction
    pub damping: f64,
    /// 1/m, abscissa span of the five bending-matrix columns
    pub curvature_range: [f64; 2],
}

pub const DEFAULT_BEND_REFERENCE: f64 = 1e-5;
pub const DEFAULT_STRETCH_STIFFNESS: f64 = 5000.0;
pub const DEFAULT_DAMPING: f64 = 0.5;
pub const DEFAULT_CURVATURE_RANGE: [f64; 2] = [0.0, 50.0];

pub fn constant_bend_matrix(value: f64) -> BendMatrix {
    [[value; BEND_COLUMNS]; 3]
}

impl MaterialParams {
    pub fn new(bend_matrix: BendMatrix, stiffness_scale: f64, area_weight: f64) -> Self {
        Self {
            bend_matrix,
            stiffness_scale,
            area_weight,
            stretch_stiffness: DEFAULT_STRETCH_STIFFNESS,
            damping: DEFAULT_DAMPING,
            curvature_range: DEFAULT_CURVATURE_RANGE,
        }
    }

    /// Checks the parameter invariants; `area_range` is the material's
    /// admissible area-weight interval when one is known.
    pub fn validate(&self, area_range: Option<(f64, f64)>) -> Result<()> {
        if self
            .bend_matrix
            .iter()
            .flatten()
            .any(|v| !(*v >= 0.0) || !v.is_finite())
        {
            return Err(Error::Config("bend matrix entries must be finite and >= 0".into()));
        }
        let (lo, hi) = STIFFNESS_SCALE_RANGE;
        if !(self.stiffness_scale >= lo && self.stiffness_scale <= hi) {
            return Err(Error::Config(format!(
                "stiffness scale {} outside [{lo}, {hi}]",
                self.stiffness_scale
            )));
        }
        if !(self.area_weight > 0.0) {
            return Err(Error::Config("area weight must be positive".into()));
        }
        if let Some((lo, hi)) = area_range {
            if !(self.area_weight >= lo && self.area_weight <= hi) {
                return Err(Error::Config(format!(
                    "area weight {} outside [{lo}, {hi}]",
                    self.area_weight
                )));
            }
        }
        if !(self.stretch_stiffness >= 0.0) || !(self.damping >= 0.0) {
            return Err(Error::Config("stretch stiffness and damping must be >= 0".into()));
        }
        let [c0, c1] = self.curvature_range;
        if !(c1 > c0) {
            return Err(Error::Config("curvature range must be non-empty".into()));
        }
        Ok(())
    }

    /// The matrix actually used by the simulator: `stiffness_scale` times
    /// the reference matrix.
    pub fn effective_bend_matrix(&self) -> BendMatrix {
        let mut m = self.bend_matrix;
        for v in m.iter_mut().flatten() {
            *v *= self.stiffness_scale;
        }
        m
    }
}

/// Locates `x` on uniform breakpoints `[lo, hi]` split into `cells` cells,
/// clamping at both ends. Returns the lower cell index and the fractional
/// position inside it.
fn locate(x: f64, lo: f64, hi: f64, cells: usize) -> (usize, f64) {
    let t = ((x - lo) / (hi - lo)).clamp(0.0, 1.0) * cells as f64;
    let i = (t.floor() as usize).min(cells - 1);
    (i, t - i as f64)
}

/// Bending stiffness `k_e` (N·m) at bend angle `theta` (rad) and curvature
/// reparametrisation `reparam` (1/m): bilinear interpolation in the scaled
/// bending matrix, with both axes clamped to their breakpoint ranges.
pub fn bending_stiffness_lookup(material: &MaterialParams, theta: f64, reparam: f64) -> f64 {
    let deg = theta.abs().to_degrees();
    let (r, fr) = locate(deg, BEND_ANGLES_DEG[0], BEND_ANGLES_DEG[2], 2);
    let [c_lo, c_hi] = material.curvature_range;
    let (c, fc) = locate(reparam, c_lo, c_hi, BEND_COLUMNS - 1);
    let m = &material.bend_matrix;
    let top = m[r][c] * (1.0 - fc) + m[r][c + 1] * fc;
    let bottom = m[r + 1][c] * (1.0 - fc) + m[r + 1][c + 1] * fc;
    material.stiffness_scale * (top * (1.0 - fr) + bottom * fr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_material() -> MaterialParams {
        let mut m = [[0.0; 5]; 3];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = 1.0 + r as f64 * 10.0 + c as f64 * c as f64;
            }
        }
        MaterialParams::new(m, 2.0, 0.2)
    }

    #[test]
    fn breakpoint_hit() {
        let mat = ramp_material();
        assert_eq!(bending_stiffness_lookup(&mat, 0.0, 0.0), 2.0 * mat.bend_matrix[0][0]);
        let k = bending_stiffness_lookup(&mat, 45f64.to_radians(), 25.0);
        assert!((k - 2.0 * mat.bend_matrix[1][2]).abs() < 1e-12);
    }

    #[test]
    fn bilinear_midpoint_is_average_of_corners() {
        let mat = ramp_material();
        let m = &mat.bend_matrix;
        let k = bending_stiffness_lookup(&mat, 22.5f64.to_radians(), 6.25);
        let avg = (m[0][0] + m[0][1] + m[1][0] + m[1][1]) / 4.0;
        assert!((k - 2.0 * avg).abs() < 1e-12);
    }

    #[test]
    fn clamps_large_angles_and_curvatures() {
        let mat = ramp_material();
        for reparam in [0.0, 3.0, 17.0, 49.0, 80.0] {
            let a = bending_stiffness_lookup(&mat, 120f64.to_radians(), reparam);
            let b = bending_stiffness_lookup(&mat, 90f64.to_radians(), reparam);
            assert_eq!(a, b);
        }
        let a = bending_stiffness_lookup(&mat, 0.3, 500.0);
        let b = bending_stiffness_lookup(&mat, 0.3, 50.0);
        assert_eq!(a, b);
        // negative angles use the magnitude
        assert_eq!(
            bending_stiffness_lookup(&mat, -0.4, 10.0),
            bending_stiffness_lookup(&mat, 0.4, 10.0)
        );
    }

    #[test]
    fn validate_rejects_out_of_range() {
        let mut mat = ramp_material();
        assert!(mat.validate(Some((0.15, 0.22))).is_ok());
        mat.stiffness_scale = 11.0;
        assert!(mat.validate(None).is_err());
        mat.stiffness_scale = 1.0;
        mat.area_weight = 0.3;
        assert!(mat.validate(Some((0.15, 0.22))).is_err());
        mat.bend_matrix[1][1] = -1.0;
        assert!(mat.validate(None).is_err());
    }
}
