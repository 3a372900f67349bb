use std::path::Path;

use serde::{Deserialize, Serialize};

use super::optimize::{maximize, BoTrace, Evaluation};
use super::{denormalize, negate_objective};
use crate::config::{PhysicalParams, RunConfig};
use crate::dataset::{load_sequence, render_sequences, Manifest, Truth};
use crate::embed::{embed_frames, psd, NetParams, PsmPoint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeErrors {
    pub stiffness_scale: Option<f64>,
    pub wind_speed: f64,
    pub area_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub material: String,
    pub params: PhysicalParams,
    pub normalized: [f64; 3],
    /// Negated mean distance at `params`.
    pub objective: f64,
    pub iterations: usize,
    pub config_digest: String,
    pub truth: Option<Truth>,
    pub errors: Option<RelativeErrors>,
    #[serde(skip)]
    pub trace: Option<BoTrace>,
}

/// Embedding of each target camera's sequence.
pub fn target_embeddings(net: &NetParams, target: &Manifest, root: &Path, config: &RunConfig) -> Result<Vec<PsmPoint>> {
    let combo = target
        .combinations
        .first()
        .ok_or_else(|| Error::InvalidInput("target manifest has no sequence".into()))?
        .id;
    (0..target.cameras)
        .map(|k| embed_frames(net, &load_sequence(target, root, combo, k)?, config.render.bounds))
        .collect()
}

/// Searches simulation parameters whose rendered sequences, seen from the
/// target's cameras, embed closest to the target's sequences.
pub fn estimate(config: &RunConfig, target: &Manifest, root: &Path, net: &NetParams) -> Result<Estimate> {
    if config.bo.budget < 4 {
        return Err(Error::Config(format!("estimation budget must be at least 4, got {}", config.bo.budget)));
    }
    if target.combinations.len() != 1 {
        return Err(Error::InvalidInput(format!(
            "target manifest must hold one sequence, found {}",
            target.combinations.len()
        )));
    }
    if net.config.input_size != [target.height, target.width] {
        return Err(Error::InvalidInput(format!(
            "network expects {:?} images, target frames are {}x{}",
            net.config.input_size, target.height, target.width
        )));
    }
    let material = config.material(&target.material)?;
    let space = config.scene.search_space(material);
    let mut sim_config = config.clone();
    sim_config.render.width = target.width;
    sim_config.render.height = target.height;
    let cameras = target.camera_poses[0].clone();
    let goal = target_embeddings(net, target, root, config)?;

    let objective = |x: &[f64]| -> Result<Evaluation> {
        let params = denormalize([x[0], x[1], x[2]], &space);
        match render_sequences(&sim_config, material, &params, &cameras, target.frames, config.sim.seed) {
            Ok(seqs) => {
                let mut total = 0.0;
                for (seq, g) in seqs.iter().zip(&goal) {
                    total += psd(embed_frames(net, seq, config.render.bounds)?, *g);
                }
                Ok(Evaluation::Value(negate_objective(total / goal.len() as f64)))
            }
            Err(Error::Instability { .. } | Error::DegenerateGeometry(_)) => Ok(Evaluation::Failed),
            Err(e) => Err(e),
        }
    };
    let trace = maximize(&config.bo, 3, objective, |x| Some(denormalize([x[0], x[1], x[2]], &space)))?;
    let best = trace.best();
    let normalized = [best.best_x[0], best.best_x[1], best.best_x[2]];
    let params = denormalize(normalized, &space);
    let errors = target.truth.map(|t| RelativeErrors {
        stiffness_scale: t.stiffness_scale.map(|s| (params.stiffness_scale - s).abs() / s),
        wind_speed: (params.wind_speed - t.wind_speed).abs() / t.wind_speed,
        area_weight: (params.area_weight - t.area_weight).abs() / t.area_weight,
    });
    Ok(Estimate {
        material: target.material.clone(),
        params,
        normalized,
        objective: best.best_objective,
        iterations: trace.entries.len(),
        config_digest: config.digest(),
        truth: target.truth,
        errors,
        trace: Some(trace),
    })
}
