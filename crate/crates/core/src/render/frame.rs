use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::camera::CameraPose;
use crate::error::{Error, Result};

pub const FRAME_SIZE: usize = 256;
pub const FRAME_EXTENSION: &str = "d256";

/// Single-channel depth image. `depth` is row-major, metres along the view
/// ray; `0.0` marks background.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f32>,
    pub camera: CameraPose,
    pub frame_index: usize,
}

/// Sidecar written next to every `.d256` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub camera: CameraPose,
    pub frame_index: usize,
    pub width: usize,
    pub height: usize,
}

impl DepthFrame {
    pub fn at(&self, row: usize, col: usize) -> f32 {
        self.depth[row * self.width + col]
    }

    pub fn foreground_count(&self) -> usize {
        self.depth.iter().filter(|d| **d != 0.0).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth.len() != self.width * self.height {
            return Err(Error::InvalidInput(format!(
                "depth buffer holds {} values for a {}x{} frame",
                self.depth.len(),
                self.width,
                self.height
            )));
        }
        if self.depth.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidInput("depth values must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn meta(&self) -> FrameMeta {
        FrameMeta {
            camera: self.camera.clone(),
            frame_index: self.frame_index,
            width: self.width,
            height: self.height,
        }
    }
}

/// Sidecar path for a frame file: `12.d256` -> `12.json`.
pub fn sidecar_path(frame_path: &Path) -> PathBuf {
    frame_path.with_extension("json")
}

pub fn encode_depth(depth: &[f32]) -> Vec<u8> {
    depth.iter().flat_map(|d| d.to_le_bytes()).collect()
}

pub fn decode_depth(bytes: &[u8]) -> Option<Vec<f32>> {
    (bytes.len() % 4 == 0).then(|| {
        bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect()
    })
}

/// Writes raw little-endian `f32` depth plus the JSON sidecar.
pub fn write_frame(path: &Path, frame: &DepthFrame) -> Result<()> {
    frame.validate()?;
    std::fs::write(path, encode_depth(&frame.depth)).map_err(|e| Error::io(path, e))?;
    let meta = sidecar_path(path);
    let json = serde_json::to_string_pretty(&frame.meta())?;
    std::fs::write(&meta, json).map_err(|e| Error::io(meta, e))
}

/// Reads a frame. Without a sidecar the frame is assumed to be 256x256 and
/// a default camera is attached.
pub fn read_frame(path: &Path) -> Result<DepthFrame> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let depth = decode_depth(&bytes).ok_or_else(|| Error::format(path, "length is not a multiple of 4"))?;
    let meta_path = sidecar_path(path);
    let meta = if meta_path.exists() {
        let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        serde_json::from_str::<FrameMeta>(&text).map_err(|e| Error::format(&meta_path, e.to_string()))?
    } else {
        FrameMeta {
            camera: CameraPose::facing_cloth(crate::sim::Vec3::new(2.0, 0.5, 0.0)),
            frame_index: 0,
            width: FRAME_SIZE,
            height: FRAME_SIZE,
        }
    };
    let frame = DepthFrame {
        width: meta.width,
        height: meta.height,
        depth,
        camera: meta.camera,
        frame_index: meta.frame_index,
    };
    frame
        .validate()
        .map_err(|e| Error::format(path, e.to_string()))?;
    Ok(frame)
}

/// Fixed depth window used to scale frames into network inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthBounds {
    pub near: f64,
    pub far: f64,
}

impl Default for DepthBounds {
    fn default() -> Self {
        Self { near: 0.2, far: 8.0 }
    }
}

/// Smallest value given to a foreground pixel, so that foreground never
/// collides with the background sentinel.
pub const FOREGROUND_FLOOR: f32 = 1e-6;

/// Maps foreground depth affinely from `[near, far]` onto `(0, 1]`,
/// clamping outside the window; background stays `0`.
pub fn normalize_depth(frame: &DepthFrame, bounds: DepthBounds) -> Vec<f32> {
    let span = bounds.far - bounds.near;
    frame
        .depth
        .iter()
        .map(|&d| {
            if d == 0.0 {
                0.0
            } else {
                (((d as f64 - bounds.near) / span) as f32).clamp(FOREGROUND_FLOOR, 1.0)
            }
        })
        .collect()
}
