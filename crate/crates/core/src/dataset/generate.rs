use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::manifest::{Failure, Manifest, ManifestKind, Sample, MANIFEST_VERSION};
use super::{sample_combinations, Combination};
use crate::config::{MaterialSpec, PhysicalParams, RunConfig};
use crate::error::{Error, Result};
use crate::render::{renderers, sample_camera_pose, write_frame, CameraPose, DepthFrame, FRAME_EXTENSION};
use crate::sim::Simulator;

/// Shape of a corpus before anything is simulated.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetPlan {
    pub material: String,
    pub combinations: usize,
    pub frames: usize,
    pub cameras: usize,
}

impl DatasetPlan {
    pub fn from_config(config: &RunConfig, material: &str) -> Result<Self> {
        config.material(material)?;
        Ok(Self {
            material: material.to_string(),
            combinations: config.dataset.combinations,
            frames: config.dataset.frames,
            cameras: config.dataset.cameras,
        })
    }

    pub fn sample_count(&self) -> usize {
        self.samples().len()
    }

    /// Every sample the corpus will contain if no simulation fails.
    pub fn samples(&self) -> Vec<Sample> {
        plan_samples(&self.material, &(0..self.combinations).collect::<Vec<_>>(), self.frames, self.cameras)
    }
}

fn sample_path(material: &str, combination: usize, camera: usize, frame: usize) -> String {
    format!("{material}/{combination}/{camera}/{frame}.{FRAME_EXTENSION}")
}

/// Sample list in canonical (combination, frame, camera) order.
pub fn plan_samples(material: &str, combinations: &[usize], frames: usize, cameras: usize) -> Vec<Sample> {
    let mut out = Vec::with_capacity(combinations.len() * frames * cameras);
    for &c in combinations {
        for f in 0..frames {
            for k in 0..cameras {
                out.push(Sample {
                    path: sample_path(material, c, k, f),
                    combination: c,
                    frame: f,
                    camera: k,
                });
            }
        }
    }
    out
}

/// Independent random stream for one combination, so results do not depend
/// on the order in which combinations are processed.
pub fn combination_rng(seed: u64, combination: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(combination as u64 + 1);
    rng
}

/// Simulates one parameter set and renders every snapshot from every camera.
/// The result is indexed `[camera][frame]`.
pub fn render_sequences(
    config: &RunConfig,
    material: &MaterialSpec,
    params: &PhysicalParams,
    cameras: &[CameraPose],
    frames: usize,
    sim_seed: u64,
) -> Result<Vec<Vec<DepthFrame>>> {
    let mut sim_config = config.sim.clone().with_frames(frames);
    sim_config.seed = sim_seed;
    let mesh = config.scene.mesh(params)?;
    let mut sim = Simulator::new(
        config.scene.material_params(material, params),
        config.scene.wind(params),
        sim_config,
    )?;
    let snapshots = sim.run(mesh)?;
    let renderer = renderers().create(&config.render.renderer)?;
    let viewport = config.render.viewport();
    let pairs: Vec<(usize, usize)> = (0..cameras.len())
        .flat_map(|k| (0..snapshots.len()).map(move |f| (k, f)))
        .collect();
    let rendered: Vec<DepthFrame> = pairs
        .par_iter()
        .map(|&(k, f)| {
            crate::render::render_with(renderer.as_ref(), &snapshots[f], &cameras[k], viewport, f)
        })
        .collect::<Result<_>>()?;
    let mut by_camera = vec![Vec::with_capacity(snapshots.len()); cameras.len()];
    for ((k, _), frame) in pairs.into_iter().zip(rendered) {
        by_camera[k].push(frame);
    }
    Ok(by_camera)
}

fn write_combination(
    root: &Path,
    material: &str,
    id: usize,
    sequences: &[Vec<DepthFrame>],
) -> Result<()> {
    for (k, seq) in sequences.iter().enumerate() {
        let dir = root.join(material).join(id.to_string()).join(k.to_string());
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for frame in seq {
            let path = root.join(sample_path(material, id, k, frame.frame_index));
            write_frame(&path, frame)?;
        }
    }
    Ok(())
}

struct Generated {
    combination: Combination,
    poses: Vec<CameraPose>,
    outcome: Result<()>,
}

fn run_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(job))
}

/// Simulates and renders a training corpus for `material` under `root`,
/// writes `root/manifest.json` and returns the manifest. Combinations whose
/// simulation blows up are listed under `failures` and left out.
pub fn generate_dataset(config: &RunConfig, material: &str, root: &Path) -> Result<Manifest> {
    let plan = DatasetPlan::from_config(config, material)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let combos = sample_combinations(config, material, plan.combinations, &mut rng)?;
    generate_combinations(config, material, &combos, root)
}

/// Like [`generate_dataset`], for combinations chosen by the caller.
/// Ids must be distinct; camera poses and simulation seeds still come from
/// `config.seed` and each id.
pub fn generate_combinations(config: &RunConfig, material: &str, combos: &[Combination], root: &Path) -> Result<Manifest> {
    let spec = config.material(material)?;
    let plan = DatasetPlan {
        combinations: combos.len(),
        ..DatasetPlan::from_config(config, material)?
    };
    if plan.frames == 0 || plan.cameras == 0 {
        return Err(Error::InvalidInput("frames and cameras must be positive".into()));
    }
    let space = config.scene.search_space(spec);
    let mut seen = std::collections::BTreeSet::new();
    for c in combos {
        if !seen.insert(c.id) {
            return Err(Error::InvalidInput(format!("combination id {} appears twice", c.id)));
        }
        if c.material != material || !space.contains(&c.params()) {
            return Err(Error::InvalidInput(format!("combination {} lies outside the {material} search space", c.id)));
        }
    }
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;

    let generated: Vec<Generated> = run_pool(config.dataset.workers, || {
        combos
            .par_iter()
            .map(|c| {
                let mut rng = combination_rng(config.seed, c.id);
                let poses: Vec<CameraPose> = (0..plan.cameras)
                    .map(|_| sample_camera_pose(&mut rng, &config.render.cameras))
                    .collect();
                let sim_seed = rng.random();
                let outcome = render_sequences(config, spec, &c.params(), &poses, plan.frames, sim_seed)
                    .and_then(|seqs| write_combination(root, material, c.id, &seqs));
                Generated {
                    combination: c.clone(),
                    poses,
                    outcome,
                }
            })
            .collect()
    })?;

    let mut combinations = Vec::new();
    let mut camera_poses = Vec::new();
    let mut failures = Vec::new();
    for g in generated {
        match g.outcome {
            Ok(()) => {
                combinations.push(g.combination);
                camera_poses.push(g.poses);
            }
            Err(e @ (Error::Instability { .. } | Error::DegenerateGeometry(_))) => {
                log::warn!("combination {} failed: {e}", g.combination.id);
                failures.push(Failure {
                    combination: g.combination,
                    error: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    let ids: Vec<usize> = combinations.iter().map(|c| c.id).collect();
    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        kind: ManifestKind::Train,
        material: material.to_string(),
        seed: config.seed,
        config_digest: config.digest(),
        frames: plan.frames,
        cameras: plan.cameras,
        width: config.render.width,
        height: config.render.height,
        samples: plan_samples(material, &ids, plan.frames, plan.cameras),
        combinations,
        camera_poses,
        failures,
        truth: None,
    };
    manifest.write(root)?;
    Ok(manifest)
}

/// Renders a pseudo-real target with known parameters: one combination,
/// `cameras` random poses drawn from `seed`, stored under `root`.
pub fn generate_target(
    config: &RunConfig,
    material: &str,
    params: &PhysicalParams,
    cameras: usize,
    seed: u64,
    root: &Path,
) -> Result<Manifest> {
    let spec = config.material(material)?;
    if !config.scene.search_space(spec).contains(params) {
        return Err(Error::InvalidInput(format!(
            "target parameters {params:?} lie outside the {material} search space"
        )));
    }
    if cameras == 0 || config.dataset.frames == 0 {
        return Err(Error::InvalidInput("frames and cameras must be positive".into()));
    }
    let frames = config.dataset.frames;
    let mut rng = combination_rng(seed, 0);
    let poses: Vec<CameraPose> = (0..cameras)
        .map(|_| sample_camera_pose(&mut rng, &config.render.cameras))
        .collect();
    let sim_seed = rng.random();
    let sequences = render_sequences(config, spec, params, &poses, frames, sim_seed)?;
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    write_combination(root, material, 0, &sequences)?;
    let combination = Combination {
        id: 0,
        stiffness_scale: params.stiffness_scale,
        wind_speed: params.wind_speed,
        area_weight: params.area_weight,
        material: material.to_string(),
    };
    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        kind: ManifestKind::Target,
        material: material.to_string(),
        seed,
        config_digest: config.digest(),
        frames,
        cameras,
        width: config.render.width,
        height: config.render.height,
        combinations: vec![combination],
        camera_poses: vec![poses],
        samples: plan_samples(material, &[0], frames, cameras),
        failures: Vec::new(),
        truth: Some((*params).into()),
    };
    manifest.write(root)?;
    Ok(manifest)
}
