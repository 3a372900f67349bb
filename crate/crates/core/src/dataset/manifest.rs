use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Combination;
use crate::config::PhysicalParams;
use crate::error::{Error, Result};
use crate::render::{normalize_depth, read_frame, CameraPose, DepthBounds, DepthFrame};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifestKind {
    Train,
    Target,
}

/// One frame file. `path` is relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub path: String,
    pub combination: usize,
    pub frame: usize,
    pub camera: usize,
}

/// A combination whose simulation could not be completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub combination: Combination,
    pub error: String,
}

/// Known parameters of a target sequence. Captures only come with measured
/// wind speed and area weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub stiffness_scale: Option<f64>,
    pub wind_speed: f64,
    pub area_weight: f64,
}

impl From<PhysicalParams> for Truth {
    fn from(p: PhysicalParams) -> Self {
        Self {
            stiffness_scale: Some(p.stiffness_scale),
            wind_speed: p.wind_speed,
            area_weight: p.area_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub kind: ManifestKind,
    pub material: String,
    pub seed: u64,
    pub config_digest: String,
    pub frames: usize,
    pub cameras: usize,
    pub width: usize,
    pub height: usize,
    pub combinations: Vec<Combination>,
    /// Camera poses per entry of `combinations`, indexed by camera id.
    pub camera_poses: Vec<Vec<CameraPose>>,
    /// Ordered by (combination, frame, camera).
    pub samples: Vec<Sample>,
    pub failures: Vec<Failure>,
    pub truth: Option<Truth>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    /// Writes `manifest.json` into `root`.
    pub fn write(&self, root: &Path) -> Result<PathBuf> {
        let path = root.join(MANIFEST_FILE);
        std::fs::write(&path, self.to_json()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Reads a manifest from a file, or from `manifest.json` inside a
    /// directory.
    pub fn read(path: &Path) -> Result<Self> {
        let file = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::format(&file, e.to_string()))?;
        if manifest.format_version != MANIFEST_VERSION {
            return Err(Error::format(
                &file,
                format!("unsupported manifest version {}", manifest.format_version),
            ));
        }
        manifest.check_shape().map_err(|e| Error::format(&file, e.to_string()))?;
        Ok(manifest)
    }

    /// Directory that sample paths are relative to.
    pub fn root_of(path: &Path) -> PathBuf {
        if path.is_dir() {
            path.to_path_buf()
        } else {
            path.parent().map(Path::to_path_buf).unwrap_or_default()
        }
    }

    pub fn check_shape(&self) -> Result<()> {
        let expected = self.combinations.len() * self.frames * self.cameras;
        if self.samples.len() != expected {
            return Err(Error::InvalidInput(format!(
                "{} samples for {} combinations x {} frames x {} cameras",
                self.samples.len(),
                self.combinations.len(),
                self.frames,
                self.cameras
            )));
        }
        if self.camera_poses.len() != self.combinations.len()
            || self.camera_poses.iter().any(|p| p.len() != self.cameras)
        {
            return Err(Error::InvalidInput("camera pose table does not match combinations".into()));
        }
        Ok(())
    }

    /// Checks that every referenced frame exists and parses.
    pub fn verify_files(&self, root: &Path) -> Result<()> {
        for s in &self.samples {
            let frame = read_frame(&root.join(&s.path))?;
            if frame.width != self.width || frame.height != self.height {
                return Err(Error::format(
                    root.join(&s.path),
                    format!("frame is {}x{}, manifest says {}x{}", frame.width, frame.height, self.width, self.height),
                ));
            }
        }
        Ok(())
    }

    /// Label (combination id) of every sample.
    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.combination).collect()
    }

    pub fn combination(&self, id: usize) -> Option<&Combination> {
        self.combinations.iter().find(|c| c.id == id)
    }

    /// Poses of the cameras used for the combination with `id`.
    pub fn poses_of(&self, id: usize) -> Option<&[CameraPose]> {
        let pos = self.combinations.iter().position(|c| c.id == id)?;
        Some(&self.camera_poses[pos])
    }
}

/// Frames of one (combination, camera) pair in frame order.
pub fn load_sequence(manifest: &Manifest, root: &Path, combination: usize, camera: usize) -> Result<Vec<DepthFrame>> {
    let frames: Vec<DepthFrame> = manifest
        .samples
        .iter()
        .filter(|s| s.combination == combination && s.camera == camera)
        .map(|s| read_frame(&root.join(&s.path)))
        .collect::<Result<_>>()?;
    if frames.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no frames for combination {combination}, camera {camera}"
        )));
    }
    Ok(frames)
}

/// Normalized network inputs for the given sample indices.
pub fn load_images(manifest: &Manifest, root: &Path, indices: &[usize], bounds: DepthBounds) -> Result<Vec<Vec<f32>>> {
    use rayon::prelude::*;
    indices
        .par_iter()
        .map(|&i| {
            let s = manifest
                .samples
                .get(i)
                .ok_or_else(|| Error::InvalidInput(format!("sample index {i} out of range")))?;
            read_frame(&root.join(&s.path)).map(|f| normalize_depth(&f, bounds))
        })
        .collect()
}
