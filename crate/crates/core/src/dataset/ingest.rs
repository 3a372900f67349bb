use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::{Manifest, ManifestKind, Sample, Truth, MANIFEST_VERSION};
use super::Combination;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::render::{read_frame, sidecar_path, CameraPose, FRAME_EXTENSION};

/// `meta.json` accompanying a captured sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureMeta {
    /// Measured wind speed, m/s.
    pub wind_speed: f64,
    /// Weighed area weight, kg/m².
    pub area_weight: f64,
    /// Capture pose, used for frames without their own sidecar.
    #[serde(default)]
    pub camera: Option<CameraPose>,
}

/// Indexes a directory of captured `.d256` frames as a target manifest
/// and writes it into the same directory. Frames are ordered by the number
/// in their file stem.
pub fn ingest_capture(config: &RunConfig, material: &str, dir: &Path) -> Result<Manifest> {
    config.material(material)?;
    let meta_path = dir.join("meta.json");
    let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: CaptureMeta =
        serde_json::from_str(&text).map_err(|e| Error::format(&meta_path, e.to_string()))?;

    let mut files: Vec<(u64, String)> = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some(FRAME_EXTENSION) {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let index: u64 = stem
            .parse()
            .map_err(|_| Error::format(&path, "frame file names must be numbers"))?;
        let name = path.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        files.push((index, name));
    }
    if files.is_empty() {
        return Err(Error::InvalidInput(format!("no .{FRAME_EXTENSION} frames in {}", dir.display())));
    }
    files.sort();

    let mut size = None;
    let mut pose = None;
    for (_, name) in &files {
        let path = dir.join(name);
        let frame = read_frame(&path)?;
        if *size.get_or_insert((frame.width, frame.height)) != (frame.width, frame.height) {
            return Err(Error::format(path, "frames differ in size"));
        }
        if pose.is_none() {
            pose = Some(match (&meta.camera, sidecar_path(&path).exists()) {
                (_, true) => frame.camera,
                (Some(c), false) => c.clone(),
                (None, false) => frame.camera,
            });
        }
    }
    let (width, height) = size.expect("at least one frame");
    let samples = files
        .iter()
        .enumerate()
        .map(|(f, (_, name))| Sample {
            path: name.clone(),
            combination: 0,
            frame: f,
            camera: 0,
        })
        .collect();
    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        kind: ManifestKind::Target,
        material: material.to_string(),
        seed: 0,
        config_digest: config.digest(),
        frames: files.len(),
        cameras: 1,
        width,
        height,
        combinations: vec![Combination {
            id: 0,
            // not measured; nominal value
            stiffness_scale: 1.0,
            wind_speed: meta.wind_speed,
            area_weight: meta.area_weight,
            material: material.to_string(),
        }],
        camera_poses: vec![vec![pose.expect("at least one frame")]],
        samples,
        failures: Vec::new(),
        truth: Some(Truth {
            stiffness_scale: None,
            wind_speed: meta.wind_speed,
            area_weight: meta.area_weight,
        }),
    };
    manifest.write(dir)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{write_frame, DepthFrame};
    use crate::sim::Vec3;

    #[test]
    fn ingests_numbered_frames_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let cam = CameraPose::facing_cloth(Vec3::new(3.0, 0.5, 0.0));
        for i in [10, 2, 1] {
            let frame = DepthFrame {
                width: 4,
                height: 3,
                depth: vec![i as f32; 12],
                camera: cam.clone(),
                frame_index: i,
            };
            write_frame(&dir.path().join(format!("{i}.d256")), &frame).unwrap();
        }
        std::fs::write(dir.path().join("meta.json"), r#"{"wind_speed": 2.5, "area_weight": 0.18}"#).unwrap();
        let m = ingest_capture(&RunConfig::default(), "gray_interlock", dir.path()).unwrap();
        let names: Vec<&str> = m.samples.iter().map(|s| s.path.as_str()).collect();
        assert_eq!(names, ["1.d256", "2.d256", "10.d256"]);
        assert_eq!((m.width, m.height, m.frames), (4, 3, 3));
        assert_eq!(m.camera_poses[0][0], cam);
        assert_eq!(m.truth.unwrap().area_weight, 0.18);
        assert_eq!(Manifest::read(dir.path()).unwrap(), m);
    }

    #[test]
    fn missing_meta_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(ingest_capture(&RunConfig::default(), "gray_interlock", dir.path()).is_err());
    }
}
