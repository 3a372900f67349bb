//! Run configuration: the material table, scene set-up, and the settings
//! of every pipeline stage, loaded from a single JSON file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bo::BoConfig;
use crate::embed::{NetConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::render::RenderConfig;
use crate::sim::{
    build_grid_mesh, constant_bend_matrix, BendMatrix, MaterialParams, PinnedEdge, SimConfig,
    TriMesh, Vec3, WindSpec, AIR_DENSITY, DEFAULT_BEND_REFERENCE, DEFAULT_CURVATURE_RANGE,
    DEFAULT_DAMPING, DEFAULT_STRETCH_STIFFNESS, STIFFNESS_SCALE_RANGE, WIND_SPEED_RANGE,
};

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "CLOTHFIT_CONFIG";

/// The three estimated quantities in physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub stiffness_scale: f64,
    /// m/s
    pub wind_speed: f64,
    /// kg/m²
    pub area_weight: f64,
}

impl PhysicalParams {
    pub fn to_array(self) -> [f64; 3] {
        [self.stiffness_scale, self.wind_speed, self.area_weight]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self {
            stiffness_scale: a[0],
            wind_speed: a[1],
            area_weight: a[2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub name: String,
    /// kg/m²
    pub area_weight_range: [f64; 2],
    /// Reference bending matrix (N·m) that `stiffness_scale` multiplies.
    pub bend_matrix: BendMatrix,
}

impl MaterialSpec {
    pub fn new(name: &str, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            area_weight_range: [lo, hi],
            bend_matrix: constant_bend_matrix(DEFAULT_BEND_REFERENCE),
        }
    }
}

/// Area-weight search spaces of the seven supported fabrics.
pub fn default_materials() -> Vec<MaterialSpec> {
    vec![
        MaterialSpec::new("white_tablecloth", 0.10, 0.17),
        MaterialSpec::new("gray_interlock", 0.15, 0.22),
        MaterialSpec::new("black_denim", 0.30, 0.37),
        MaterialSpec::new("sparkle_fleece", 0.23, 0.30),
        MaterialSpec::new("pink_nylon", 0.16, 0.23),
        MaterialSpec::new("ponte_roma", 0.23, 0.30),
        MaterialSpec::new("red_violet", 0.10, 0.17),
    ]
}

/// Axis-aligned box over (stiffness scale, wind speed, area weight).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub bounds: [[f64; 2]; 3],
}

impl SearchSpace {
    pub fn center(&self) -> PhysicalParams {
        PhysicalParams::from_array(self.bounds.map(|[lo, hi]| 0.5 * (lo + hi)))
    }

    pub fn contains(&self, p: &PhysicalParams) -> bool {
        p.to_array()
            .iter()
            .zip(&self.bounds)
            .all(|(x, [lo, hi])| *x >= *lo && *x <= *hi)
    }
}

/// Fixed parts of the hanging-cloth scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub grid_n: usize,
    /// m
    pub cloth_size: f64,
    pub pinned_edge: PinnedEdge,
    pub wind_direction: Vec3,
    pub air_density: f64,
    pub stretch_stiffness: f64,
    pub damping: f64,
    pub curvature_range: [f64; 2],
    pub stiffness_scale_range: [f64; 2],
    pub wind_speed_range: [f64; 2],
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            grid_n: 16,
            cloth_size: 1.0,
            pinned_edge: PinnedEdge::Top,
            wind_direction: Vec3::new(-1.0, 0.0, 0.0),
            air_density: AIR_DENSITY,
            stretch_stiffness: DEFAULT_STRETCH_STIFFNESS,
            damping: DEFAULT_DAMPING,
            curvature_range: DEFAULT_CURVATURE_RANGE,
            stiffness_scale_range: [STIFFNESS_SCALE_RANGE.0, STIFFNESS_SCALE_RANGE.1],
            wind_speed_range: [WIND_SPEED_RANGE.0, WIND_SPEED_RANGE.1],
        }
    }
}

impl SceneConfig {
    pub fn search_space(&self, material: &MaterialSpec) -> SearchSpace {
        SearchSpace {
            bounds: [
                self.stiffness_scale_range,
                self.wind_speed_range,
                material.area_weight_range,
            ],
        }
    }

    pub fn material_params(&self, material: &MaterialSpec, p: &PhysicalParams) -> MaterialParams {
        MaterialParams {
            bend_matrix: material.bend_matrix,
            stiffness_scale: p.stiffness_scale,
            area_weight: p.area_weight,
            stretch_stiffness: self.stretch_stiffness,
            damping: self.damping,
            curvature_range: self.curvature_range,
        }
    }

    pub fn wind(&self, p: &PhysicalParams) -> WindSpec {
        WindSpec {
            speed: p.wind_speed,
            direction: self.wind_direction.normalize(),
            air_density: self.air_density,
        }
    }

    pub fn mesh(&self, p: &PhysicalParams) -> Result<TriMesh> {
        build_grid_mesh(self.grid_n, self.cloth_size, p.area_weight, self.pinned_edge)
    }
}

/// Corpus size per material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub combinations: usize,
    pub frames: usize,
    pub cameras: usize,
    /// Parallel workers for generation; 0 uses every core.
    pub workers: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            combinations: 30,
            frames: 60,
            cameras: 6,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Name of a registered clustering metric.
    pub metric: String,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            metric: "loo-1nn".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub materials: Vec<MaterialSpec>,
    pub scene: SceneConfig,
    pub sim: SimConfig,
    pub render: RenderConfig,
    pub dataset: DatasetConfig,
    pub net: NetConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub bo: BoConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            materials: default_materials(),
            scene: SceneConfig::default(),
            sim: SimConfig::default(),
            render: RenderConfig::default(),
            dataset: DatasetConfig::default(),
            net: NetConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            bo: BoConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    /// Hex SHA-256 of the compact JSON form; recorded in every artifact.
    /// The worker count does not affect results and is left out.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.dataset.workers = 0;
        digest_json(&canonical)
    }

    pub fn material(&self, name: &str) -> Result<&MaterialSpec> {
        self.materials.iter().find(|m| m.name == name).ok_or_else(|| {
            Error::Config(format!(
                "unknown material `{name}` (known: {})",
                self.materials.iter().map(|m| m.name.as_str()).collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.materials.is_empty() {
            return Err(Error::Config("material table is empty".into()));
        }
        for m in &self.materials {
            let [lo, hi] = m.area_weight_range;
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::Config(format!("material `{}` has an empty area-weight range", m.name)));
            }
        }
        for (name, [lo, hi]) in [
            ("stiffness scale", self.scene.stiffness_scale_range),
            ("wind speed", self.scene.wind_speed_range),
        ] {
            if !(hi > lo) {
                return Err(Error::Config(format!("{name} range is empty")));
            }
        }
        if self.scene.grid_n < 2 {
            return Err(Error::Config("scene.grid_n must be >= 2".into()));
        }
        if !(self.scene.wind_direction.norm() > 0.0) {
            return Err(Error::Config("scene.wind_direction must be non-zero".into()));
        }
        self.sim.substeps_per_frame()?;
        if self.render.width == 0 || self.render.height == 0 {
            return Err(Error::Config("render size must be positive".into()));
        }
        crate::render::renderers().create(&self.render.renderer)?;
        crate::sim::wind_models().create(&self.sim.wind_model)?;
        crate::eval::metrics().create(&self.eval.metric)?;
        self.net.validate()?;
        if self.net.input_size != [self.render.height, self.render.width] {
            return Err(Error::Config(format!(
                "net input {:?} does not match render size {}x{}",
                self.net.input_size, self.render.height, self.render.width
            )));
        }
        self.bo.validate()?;
        Ok(())
    }
}

pub fn digest_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("value serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.materials.len(), 7);
        let gi = cfg.material("gray_interlock").unwrap();
        assert_eq!(gi.area_weight_range, [0.15, 0.22]);
        assert!(cfg.material("silk").is_err());
    }

    #[test]
    fn json_round_trip_keeps_digest() {
        let cfg = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.digest(), cfg.digest());
        assert_eq!(cfg.digest().len(), 64);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"seed": 7, "dataset": {"combinations": 2}}"#).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.dataset.combinations, 2);
        assert_eq!(cfg.dataset.frames, 60);
        cfg.validate().unwrap();
    }

    #[test]
    fn search_space_center() {
        let cfg = RunConfig::default();
        let space = cfg.scene.search_space(cfg.material("black_denim").unwrap());
        let c = space.center();
        assert!((c.stiffness_scale - 5.05).abs() < 1e-12);
        assert!((c.wind_speed - 3.5).abs() < 1e-12);
        assert!((c.area_weight - 0.335).abs() < 1e-12);
        assert!(space.contains(&c));
    }
}
