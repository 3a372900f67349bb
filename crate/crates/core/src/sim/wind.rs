use serde::{Deserialize, Serialize};

use super::{TriMesh, Vec3};
use crate::error::{Error, Result};
use crate::registry::Registry;

pub const AIR_DENSITY: f64 = 1.225;
pub const WIND_SPEED_RANGE: (f64, f64) = (1.0, 6.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindSpec {
    /// m/s
    pub speed: f64,
    pub direction: Vec3,
    /// kg/m³
    pub air_density: f64,
}

impl WindSpec {
    pub fn new(speed: f64, direction: Vec3) -> Self {
        Self {
            speed,
            direction,
            air_density: AIR_DENSITY,
        }
    }

    pub fn validate(&self, speed_range: Option<(f64, f64)>) -> Result<()> {
        if ((self.direction.norm() - 1.0).abs()) > 1e-9 {
            return Err(Error::Config(format!(
                "wind direction must be a unit vector, |d| = {}",
                self.direction.norm()
            )));
        }
        if !(self.air_density > 0.0) {
            return Err(Error::Config("air density must be positive".into()));
        }
        if !(self.speed >= 0.0) {
            return Err(Error::Config("wind speed must be >= 0".into()));
        }
        if let Some((lo, hi)) = speed_range {
            if !(self.speed >= lo && self.speed <= hi) {
                return Err(Error::Config(format!(
                    "wind speed {} outside [{lo}, {hi}]",
                    self.speed
                )));
            }
        }
        Ok(())
    }
}

/// Total wind force on a surface of a given area squarely facing the wind.
pub trait WindModel: Send + Sync {
    fn name(&self) -> &'static str;
    fn total_force(&self, area: f64, wind: &WindSpec) -> f64;
}

/// `½ A ρ v`, linear in wind speed.
pub struct LinearDrag;

/// `½ A ρ v²`, the dimensionally consistent dynamic-pressure form.
pub struct QuadraticDrag;

impl WindModel for LinearDrag {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn total_force(&self, area: f64, wind: &WindSpec) -> f64 {
        0.5 * area * wind.air_density * wind.speed
    }
}

impl WindModel for QuadraticDrag {
    fn name(&self) -> &'static str {
        "quadratic"
    }

    fn total_force(&self, area: f64, wind: &WindSpec) -> f64 {
        0.5 * area * wind.air_density * wind.speed * wind.speed
    }
}

pub fn wind_models() -> Registry<dyn WindModel> {
    Registry::<dyn WindModel>::new("wind model")
        .with("linear", || Box::new(LinearDrag))
        .with("quadratic", || Box::new(QuadraticDrag))
}

/// Total wind force using the default (linear) model.
pub fn wind_force_total(area: f64, wind: &WindSpec) -> f64 {
    LinearDrag.total_force(area, wind)
}

/// Wind force on one triangle: the model's force for the face area, scaled
/// by how squarely the face meets the wind, `|n̂·d̂|`, and pointing along
/// the wind direction. Degenerate faces receive nothing.
pub fn face_wind_force(mesh: &TriMesh, face: usize, wind: &WindSpec, model: &dyn WindModel) -> Vec3 {
    match mesh.face_normal(face) {
        Some(n) => {
            let area = mesh.face_area(face);
            wind.direction * (model.total_force(area, wind) * n.dot(&wind.direction).abs())
        }
        None => Vec3::zeros(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{build_grid_mesh, PinnedEdge, TriMesh};

    #[test]
    fn total_force_values() {
        let w = WindSpec::new(2.0, Vec3::x());
        assert!((wind_force_total(1.0, &w) - 1.225).abs() < 1e-15);
        assert_eq!(wind_force_total(1.0, &WindSpec::new(0.0, Vec3::x())), 0.0);
        let w3 = WindSpec::new(3.0, Vec3::x());
        assert_eq!(wind_force_total(2.0, &w3), 2.0 * wind_force_total(1.0, &w3));
        assert!((QuadraticDrag.total_force(1.0, &w3) - 0.5 * 1.225 * 9.0).abs() < 1e-15);
    }

    fn single_triangle() -> TriMesh {
        TriMesh::from_parts(
            vec![Vec3::zeros(), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)],
            vec![[0, 1, 2]],
            vec![1.0; 3],
            vec![false; 3],
        )
        .unwrap()
    }

    #[test]
    fn edge_on_face_gets_nothing() {
        let m = single_triangle(); // normal +x
        let w = WindSpec::new(4.0, Vec3::y());
        assert_eq!(face_wind_force(&m, 0, &w, &LinearDrag).norm(), 0.0);
    }

    #[test]
    fn face_on_gets_full_force() {
        let m = single_triangle();
        let w = WindSpec::new(4.0, -Vec3::x());
        let f = face_wind_force(&m, 0, &w, &LinearDrag);
        assert!((f.norm() - wind_force_total(0.5, &w)).abs() < 1e-15);
        assert!(f.x < 0.0);
    }

    #[test]
    fn flat_cloth_sums_to_total() {
        let m = build_grid_mesh(7, 1.0, 0.2, PinnedEdge::Top).unwrap();
        let w = WindSpec::new(3.3, -Vec3::x());
        let total: Vec3 = (0..m.face_count())
            .map(|f| face_wind_force(&m, f, &w, &LinearDrag))
            .sum();
        assert!((total.norm() - wind_force_total(1.0, &w)).abs() < 1e-9);
    }

    #[test]
    fn registry_resolves_models() {
        let reg = wind_models();
        assert_eq!(reg.create("quadratic").unwrap().name(), "quadratic");
        assert!(reg.create("cubic").is_err());
    }

    #[test]
    fn validate_direction() {
        assert!(WindSpec::new(2.0, Vec3::new(1.0, 1.0, 0.0)).validate(None).is_err());
        assert!(WindSpec::new(7.0, Vec3::x()).validate(Some(WIND_SPEED_RANGE)).is_err());
        assert!(WindSpec::new(2.0, Vec3::x()).validate(Some(WIND_SPEED_RANGE)).is_ok());
    }
}
