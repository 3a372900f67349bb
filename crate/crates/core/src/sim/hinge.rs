//! Discrete-hinge bending: dihedral angle, its gradient, and the bending
//! force on the four-vertex stencil.

use super::material::{bending_stiffness_lookup, MaterialParams};
use super::{Hinge, TriMesh, Vec3};
use crate::error::{Error, Result};

/// Geometric quantities of one hinge at the current configuration.
#[derive(Debug, Clone, Copy)]
pub struct HingeGeometry {
    /// Signed dihedral angle in (-π, π], zero when the faces are coplanar.
    pub theta: f64,
    pub edge_length: f64,
    /// Heights of the wing vertices above the shared edge.
    pub heights: [f64; 2],
    /// Gradient of `theta` with respect to each stencil vertex.
    pub gradient: [Vec3; 4],
}

impl HingeGeometry {
    /// The curvature reparametrisation `|sin(θ/2)| / (h1 + h2)` (1/m).
    pub fn reparam(&self) -> f64 {
        (self.theta / 2.0).sin().abs() / (self.heights[0] + self.heights[1])
    }
}

pub fn hinge_geometry(positions: &[Vec3], hinge: &Hinge) -> Result<HingeGeometry> {
    let [w1, w2, s, e] = hinge.stencil;
    let (x1, x2, x3, x4) = (positions[w1], positions[w2], positions[s], positions[e]);
    let edge = x4 - x3;
    let edge_length = edge.norm();
    let n1 = (x1 - x3).cross(&(x1 - x4));
    let n2 = (x2 - x4).cross(&(x2 - x3));
    let (a1, a2) = (n1.norm_squared(), n2.norm_squared());
    if !(edge_length > 0.0) || !(a1 > 0.0) || !(a2 > 0.0) || !(a1 + a2).is_finite() {
        return Err(Error::DegenerateGeometry(format!(
            "hinge on edge ({s}, {e}) has a zero-area face"
        )));
    }
    let e_hat = edge / edge_length;
    let (u1, u2) = (n1 / a1.sqrt(), n2 / a2.sqrt());
    let theta = u1.cross(&u2).dot(&e_hat).atan2(u1.dot(&u2));

    let g1 = n1 / a1;
    let g2 = n2 / a2;
    let gradient = [
        -g1 * edge_length,
        -g2 * edge_length,
        -(g1 * (x1 - x4).dot(&e_hat) + g2 * (x2 - x4).dot(&e_hat)),
        g1 * (x1 - x3).dot(&e_hat) + g2 * (x2 - x3).dot(&e_hat),
    ];
    Ok(HingeGeometry {
        theta,
        edge_length,
        heights: [a1.sqrt() / edge_length, a2.sqrt() / edge_length],
        gradient,
    })
}

pub fn dihedral_angle(mesh: &TriMesh, hinge: &Hinge) -> Result<f64> {
    hinge_geometry(&mesh.positions, hinge).map(|g| g.theta)
}

/// Scalar factor `k_e (sin(θ/2) - sin(θ₀/2)) |E| / (h1 + h2)` multiplying
/// the dihedral-angle gradient. With a flat rest state this is exactly
/// `k_e sin(θ/2) (h1 + h2)⁻¹ |E|`.
pub fn bending_magnitude(geom: &HingeGeometry, rest_angle: f64, material: &MaterialParams) -> f64 {
    let k_e = bending_stiffness_lookup(material, geom.theta, geom.reparam());
    k_e * ((geom.theta / 2.0).sin() - (rest_angle / 2.0).sin()) * geom.edge_length
        / (geom.heights[0] + geom.heights[1])
}

/// Forces on the stencil vertices `[wing1, wing2, edge_start, edge_end]`,
/// directed against the gradient of the dihedral angle.
pub fn bending_force_at(
    positions: &[Vec3],
    hinge: &Hinge,
    material: &MaterialParams,
) -> Result<[Vec3; 4]> {
    let geom = hinge_geometry(positions, hinge)?;
    let c = bending_magnitude(&geom, hinge.rest_angle, material);
    Ok(geom.gradient.map(|g| -g * c))
}

pub fn bending_force(mesh: &TriMesh, hinge: &Hinge, material: &MaterialParams) -> Result<[Vec3; 4]> {
    bending_force_at(&mesh.positions, hinge, material)
}

/// Potential whose derivative in θ is the bending magnitude with the
/// stiffness and lengths held at their current values. Used for energy
/// bookkeeping only.
pub fn bending_energy(geom: &HingeGeometry, rest_angle: f64, material: &MaterialParams) -> f64 {
    let k_e = bending_stiffness_lookup(material, geom.theta, geom.reparam());
    let kappa = k_e * geom.edge_length / (geom.heights[0] + geom.heights[1]);
    let phi = |t: f64| 2.0 * (1.0 - (t / 2.0).cos()) - t * (rest_angle / 2.0).sin();
    kappa * (phi(geom.theta) - phi(rest_angle))
}
