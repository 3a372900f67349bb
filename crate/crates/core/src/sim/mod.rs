//! Triangle-mesh cloth dynamics: edge springs for stretching, discrete
//! hinges for bending, per-face wind, gravity and mass-proportional damping.

mod hinge;
mod integrate;
pub mod io;
mod material;
mod mesh;
mod wind;

pub type Vec3 = nalgebra::Vector3<f64>;

pub use hinge::{
    bending_energy, bending_force, bending_force_at, bending_magnitude, dihedral_angle,
    hinge_geometry, HingeGeometry,
};
pub use integrate::{internal_forces, simulate, step, total_energy, SimConfig, Simulator};
pub use material::{
    bending_stiffness_lookup, constant_bend_matrix, BendMatrix, MaterialParams, BEND_ANGLES_DEG,
    BEND_COLUMNS, DEFAULT_BEND_REFERENCE, DEFAULT_CURVATURE_RANGE, DEFAULT_DAMPING,
    DEFAULT_STRETCH_STIFFNESS, STIFFNESS_SCALE_RANGE,
};
pub use mesh::{build_grid_mesh, triangle_area, Edge, Hinge, PinnedEdge, TriMesh};
pub use wind::{
    face_wind_force, wind_force_total, wind_models, LinearDrag, QuadraticDrag, WindModel, WindSpec,
    AIR_DENSITY, WIND_SPEED_RANGE,
};
