use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hinge::{bending_energy, bending_force_at, hinge_geometry};
use super::material::MaterialParams;
use super::wind::{face_wind_force, wind_models, WindModel, WindSpec};
use super::{TriMesh, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Integrator substep (s).
    pub dt: f64,
    /// Simulated time (s).
    pub duration: f64,
    /// Snapshot rate (Hz).
    pub sample_rate: f64,
    /// m/s²
    pub gravity: Vec3,
    pub seed: u64,
    /// Name of the registered [`WindModel`].
    pub wind_model: String,
    /// Amplitude (m) of a seeded random offset applied to free vertices
    /// before the first step. Zero keeps the rest shape exactly.
    pub initial_jitter: f64,
    /// Any vertex faster than this (m/s) is treated as a blow-up.
    pub max_speed: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1.0 / 8000.0,
            duration: 3.0,
            sample_rate: 20.0,
            gravity: Vec3::new(0.0, 0.0, -9.81),
            seed: 0,
            wind_model: "linear".into(),
            initial_jitter: 0.0,
            max_speed: 1e3,
        }
    }
}

impl SimConfig {
    /// Number of snapshots, `duration × sample_rate`, which must be integral.
    pub fn frame_count(&self) -> Result<usize> {
        let frames = self.duration * self.sample_rate;
        let rounded = frames.round();
        if !(self.sample_rate > 0.0) || !(self.duration > 0.0) || (frames - rounded).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "duration {} s at {} Hz is not a whole number of frames",
                self.duration, self.sample_rate
            )));
        }
        Ok(rounded as usize)
    }

    /// Integrator substeps per snapshot interval; the interval must be a
    /// whole multiple of `dt`.
    pub fn substeps_per_frame(&self) -> Result<usize> {
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        let n = 1.0 / (self.sample_rate * self.dt);
        let rounded = n.round();
        if rounded < 1.0 || (n - rounded).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "frame interval 1/{} s is not a multiple of dt = {}",
                self.sample_rate, self.dt
            )));
        }
        Ok(rounded as usize)
    }

    /// Sets `duration` so that exactly `frames` snapshots are produced.
    pub fn with_frames(mut self, frames: usize) -> Self {
        self.duration = frames as f64 / self.sample_rate;
        self
    }
}

/// Stretch (edge springs) plus bending forces per vertex.
pub fn internal_forces(mesh: &TriMesh, material: &MaterialParams) -> Result<Vec<Vec3>> {
    let mut forces = vec![Vec3::zeros(); mesh.vertex_count()];
    add_stretch_forces(mesh, material, &mut forces);
    add_bending_forces(mesh, material, &mut forces)?;
    Ok(forces)
}

fn add_stretch_forces(mesh: &TriMesh, material: &MaterialParams, forces: &mut [Vec3]) {
    let k = material.stretch_stiffness;
    for e in &mesh.edges {
        let [a, b] = e.vertices;
        let d = mesh.positions[b] - mesh.positions[a];
        let len = d.norm();
        if len > 0.0 {
            let f = d * (k * (len - e.rest_length) / len);
            forces[a] += f;
            forces[b] -= f;
        }
    }
}

fn add_bending_forces(mesh: &TriMesh, material: &MaterialParams, forces: &mut [Vec3]) -> Result<()> {
    for h in &mesh.hinges {
        let f = bending_force_at(&mesh.positions, h, material)?;
        for (v, fv) in h.stencil.iter().zip(f) {
            forces[*v] += fv;
        }
    }
    Ok(())
}

/// Kinetic + stretch + bending + gravitational potential energy.
pub fn total_energy(mesh: &TriMesh, material: &MaterialParams, gravity: &Vec3) -> Result<f64> {
    let kinetic: f64 = mesh
        .velocities
        .iter()
        .zip(&mesh.masses)
        .map(|(v, m)| 0.5 * m * v.norm_squared())
        .sum();
    let stretch: f64 = mesh
        .edges
        .iter()
        .map(|e| {
            let [a, b] = e.vertices;
            let dl = (mesh.positions[b] - mesh.positions[a]).norm() - e.rest_length;
            0.5 * material.stretch_stiffness * dl * dl
        })
        .sum();
    let mut bending = 0.0;
    for h in &mesh.hinges {
        let g = hinge_geometry(&mesh.positions, h)?;
        bending += bending_energy(&g, h.rest_angle, material);
    }
    let potential: f64 = mesh
        .positions
        .iter()
        .zip(&mesh.masses)
        .map(|(x, m)| -m * gravity.dot(x))
        .sum();
    Ok(kinetic + stretch + bending + potential)
}

/// Semi-implicit Euler integrator for one cloth under one wind field.
pub struct Simulator {
    pub material: MaterialParams,
    pub wind: WindSpec,
    pub config: SimConfig,
    wind_model: Box<dyn WindModel>,
    time: f64,
}

impl Simulator {
    pub fn new(material: MaterialParams, wind: WindSpec, config: SimConfig) -> Result<Self> {
        if !(config.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", config.dt)));
        }
        let wind_model = wind_models().create(&config.wind_model)?;
        Ok(Self {
            material,
            wind,
            config,
            wind_model,
            time: 0.0,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// All forces acting on each vertex at the current state.
    pub fn forces(&self, mesh: &TriMesh) -> Result<Vec<Vec3>> {
        let mut forces = internal_forces(mesh, &self.material)?;
        let total_mass = mesh.total_mass();
        for (i, f) in forces.iter_mut().enumerate() {
            let m = mesh.masses[i];
            *f += self.config.gravity * m;
            *f -= mesh.velocities[i] * (self.material.damping * m / total_mass);
        }
        if self.wind.speed != 0.0 {
            for (fi, face) in mesh.faces.iter().enumerate() {
                let share = face_wind_force(mesh, fi, &self.wind, self.wind_model.as_ref()) / 3.0;
                for &v in face {
                    forces[v] += share;
                }
            }
        }
        Ok(forces)
    }

    /// Advances `mesh` by one substep: velocities first, then positions.
    pub fn step(&mut self, mesh: &mut TriMesh) -> Result<()> {
        let dt = self.config.dt;
        let forces = self.forces(mesh).map_err(|e| match e {
            Error::DegenerateGeometry(_) => Error::Instability { dt, time: self.time },
            other => other,
        })?;
        let limit = self.config.max_speed;
        for i in 0..mesh.vertex_count() {
            if mesh.pinned[i] {
                mesh.velocities[i] = Vec3::zeros();
                continue;
            }
            let v = mesh.velocities[i] + forces[i] * (dt / mesh.masses[i]);
            mesh.velocities[i] = v;
            mesh.positions[i] += v * dt;
        }
        self.time += dt;
        let too_fast = mesh.velocities.iter().any(|v| !(v.norm() <= limit));
        if too_fast || !mesh.is_finite() {
            return Err(Error::Instability {
                dt,
                time: self.time,
            });
        }
        Ok(())
    }

    /// Runs for `config.duration`, returning one snapshot at the end of each
    /// `1 / sample_rate` interval.
    pub fn run(&mut self, mut mesh: TriMesh) -> Result<Vec<TriMesh>> {
        let frames = self.config.frame_count()?;
        let substeps = self.config.substeps_per_frame()?;
        if self.config.initial_jitter > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
            let a = self.config.initial_jitter;
            for i in 0..mesh.vertex_count() {
                let offset = Vec3::new(
                    rng.random_range(-a..=a),
                    rng.random_range(-a..=a),
                    rng.random_range(-a..=a),
                );
                if !mesh.pinned[i] {
                    mesh.positions[i] += offset;
                }
            }
        }
        let mut snapshots = Vec::with_capacity(frames);
        for _ in 0..frames {
            for _ in 0..substeps {
                self.step(&mut mesh)?;
            }
            snapshots.push(mesh.clone());
        }
        Ok(snapshots)
    }
}

pub fn step(
    mesh: &TriMesh,
    material: &MaterialParams,
    wind: &WindSpec,
    config: &SimConfig,
) -> Result<TriMesh> {
    let mut sim = Simulator::new(material.clone(), wind.clone(), config.clone())?;
    let mut next = mesh.clone();
    sim.step(&mut next)?;
    Ok(next)
}

pub fn simulate(
    mesh: &TriMesh,
    material: &MaterialParams,
    wind: &WindSpec,
    config: &SimConfig,
) -> Result<Vec<TriMesh>> {
    Simulator::new(material.clone(), wind.clone(), config.clone())?.run(mesh.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::material::{constant_bend_matrix, DEFAULT_BEND_REFERENCE};
    use crate::sim::{build_grid_mesh, PinnedEdge};

    fn material(aw: f64) -> MaterialParams {
        MaterialParams::new(constant_bend_matrix(DEFAULT_BEND_REFERENCE), 1.0, aw)
    }

    fn calm() -> WindSpec {
        WindSpec::new(0.0, -Vec3::x())
    }

    #[test]
    fn rest_mesh_without_loads_is_unchanged() {
        let mesh = build_grid_mesh(6, 1.0, 0.2, PinnedEdge::Top).unwrap();
        let cfg = SimConfig {
            gravity: Vec3::zeros(),
            ..SimConfig::default()
        };
        let next = step(&mesh, &material(0.2), &calm(), &cfg).unwrap();
        assert_eq!(next.positions, mesh.positions);
        assert!(next.velocities.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn pinned_vertices_stay_put() {
        let mesh = build_grid_mesh(6, 1.0, 0.2, PinnedEdge::Top).unwrap();
        let wind = WindSpec::new(5.0, -Vec3::x());
        let mut sim = Simulator::new(material(0.2), wind, SimConfig::default()).unwrap();
        let mut m = mesh.clone();
        for _ in 0..200 {
            sim.step(&mut m).unwrap();
        }
        for i in 0..m.vertex_count() {
            if m.pinned[i] {
                assert_eq!(m.positions[i], mesh.positions[i]);
                assert_eq!(m.velocities[i], Vec3::zeros());
            }
        }
        assert!(m.positions.iter().zip(&mesh.positions).any(|(a, b)| a != b));
    }

    #[test]
    fn free_fall_matches_ballistics() {
        let mesh = build_grid_mesh(5, 1.0, 0.2, PinnedEdge::None).unwrap();
        let mut mat = material(0.2);
        mat.damping = 0.0;
        let cfg = SimConfig::default();
        let mut sim = Simulator::new(mat, calm(), cfg.clone()).unwrap();
        let start = mesh.centroid();
        let mut m = mesh;
        for _ in 0..10 {
            sim.step(&mut m).unwrap();
        }
        let t = 10.0 * cfg.dt;
        let expected = start + cfg.gravity * (0.5 * t * t);
        assert!((m.centroid() - expected).norm() < 1e-6);
    }

    #[test]
    fn free_fall_follows_discrete_recurrence() {
        // v_n = n g dt and x_n = x_0 + g dt² n(n+1)/2 for this update order
        let mesh = build_grid_mesh(3, 1.0, 0.2, PinnedEdge::None).unwrap();
        let mut mat = material(0.2);
        mat.damping = 0.0;
        let cfg = SimConfig::default();
        let mut sim = Simulator::new(mat, calm(), cfg.clone()).unwrap();
        let start = mesh.centroid();
        let mut m = mesh;
        let n = 8000;
        for _ in 0..n {
            sim.step(&mut m).unwrap();
        }
        let n = n as f64;
        let expected = start + cfg.gravity * (cfg.dt * cfg.dt * n * (n + 1.0) / 2.0);
        assert!((m.centroid() - expected).norm() < 1e-9);
    }

    #[test]
    fn internal_forces_cancel() {
        let mut mesh = build_grid_mesh(6, 1.0, 0.2, PinnedEdge::Top).unwrap();
        let mut mat = material(0.2);
        mat.bend_matrix = constant_bend_matrix(1e-2);
        let wind = WindSpec::new(6.0, -Vec3::x());
        let mut sim = Simulator::new(mat.clone(), wind, SimConfig::default()).unwrap();
        for _ in 0..400 {
            sim.step(&mut mesh).unwrap();
            let f = internal_forces(&mesh, &mat).unwrap();
            let scale = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let net: Vec3 = f.iter().sum();
            assert!(net.norm() <= 1e-8 * scale.max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn damped_energy_decreases() {
        let mut mesh = build_grid_mesh(5, 1.0, 0.2, PinnedEdge::None).unwrap();
        // kick the cloth with a smooth velocity field
        for (i, v) in mesh.velocities.iter_mut().enumerate() {
            *v = Vec3::new((i as f64 * 0.7).sin(), 0.3 * (i as f64 * 0.4).cos(), 0.0) * 0.2;
        }
        let mut mat = material(0.2);
        mat.bend_matrix = constant_bend_matrix(1e-3);
        let cfg = SimConfig {
            gravity: Vec3::zeros(),
            ..SimConfig::default()
        };
        let mut sim = Simulator::new(mat.clone(), calm(), cfg.clone()).unwrap();
        for _ in 0..50 {
            sim.step(&mut mesh).unwrap();
        }
        let mut prev = total_energy(&mesh, &mat, &cfg.gravity).unwrap();
        for _ in 0..100 {
            for _ in 0..10 {
                sim.step(&mut mesh).unwrap();
            }
            let e = total_energy(&mesh, &mat, &cfg.gravity).unwrap();
            assert!(e <= prev, "{e} > {prev}");
            prev = e;
        }
    }

    #[test]
    fn snapshot_counts() {
        let mesh = build_grid_mesh(3, 1.0, 0.2, PinnedEdge::Top).unwrap();
        let wind = WindSpec::new(2.0, -Vec3::x());
        let cfg = SimConfig {
            dt: 1.0 / 2000.0,
            ..SimConfig::default()
        };
        let out = simulate(&mesh, &material(0.2), &wind, &cfg).unwrap();
        assert_eq!(out.len(), 60);
        let short = SimConfig {
            duration: 1.0,
            ..cfg.clone()
        };
        assert_eq!(simulate(&mesh, &material(0.2), &wind, &short).unwrap().len(), 20);
    }

    #[test]
    fn simulate_is_deterministic() {
        let mesh = build_grid_mesh(4, 1.0, 0.2, PinnedEdge::Top).unwrap();
        let wind = WindSpec::new(3.0, -Vec3::x());
        let cfg = SimConfig {
            initial_jitter: 1e-3,
            seed: 9,
            ..SimConfig::default()
        }
        .with_frames(5);
        let a = simulate(&mesh, &material(0.2), &wind, &cfg).unwrap();
        let b = simulate(&mesh, &material(0.2), &wind, &cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.positions, y.positions);
        }
    }

    #[test]
    fn oversized_step_reports_instability() {
        let mesh = build_grid_mesh(8, 1.0, 0.15, PinnedEdge::Top).unwrap();
        let wind = WindSpec::new(6.0, -Vec3::x());
        let cfg = SimConfig {
            dt: 1.0 / 100.0,
            ..SimConfig::default()
        };
        match simulate(&mesh, &material(0.15), &wind, &cfg) {
            Err(Error::Instability { dt, .. }) => assert_eq!(dt, 0.01),
            other => panic!("expected instability, got {:?}", other.map(|v| v.len())),
        }
    }

    #[test]
    fn rejects_fractional_frame_counts() {
        let cfg = SimConfig {
            duration: 0.33,
            ..SimConfig::default()
        };
        assert!(cfg.frame_count().is_err());
        let cfg = SimConfig {
            dt: 0.003,
            ..SimConfig::default()
        };
        assert!(cfg.substeps_per_frame().is_err());
    }
}
