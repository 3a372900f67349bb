use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{NetConfig, TrainConfig};
use super::net::{triplet_gradients, Gradients, NetParams, TripletImages};
use crate::dataset::{load_images, split_indices, Manifest, Split, TripletSampler};
use crate::error::{Error, Result};
use crate::render::DepthBounds;

/// Adam moments for every parameter block.
pub struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    pub fn new(params: &NetParams, config: &TrainConfig) -> Self {
        let zeros = Gradients::zeros(params).blocks;
        Self {
            beta1: config.adam_beta1,
            beta2: config.adam_beta2,
            eps: config.adam_eps,
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut NetParams, grads: &Gradients, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let (m, v) = (&mut self.m, &mut self.v);
        params.apply(|i, values| {
            for (j, x) in values.iter_mut().enumerate() {
                let g = grads.blocks[i][j];
                m[i][j] = b1 * m[i][j] + (1.0 - b1) * g;
                v[i][j] = b2 * v[i][j] + (1.0 - b2) * g * g;
                *x -= lr * (m[i][j] / c1) / ((v[i][j] / c2).sqrt() + eps);
            }
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Mean triplet loss of the epoch's batches, measured before each update.
    pub mean_loss: f64,
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub params: NetParams,
    pub history: Vec<EpochStats>,
}

/// Trains from scratch on `images` labelled by `labels` (combination ids).
/// Triplets are drawn uniformly at random each epoch. Final parameters are
/// rounded to `f32`, the precision they are saved in.
pub fn train(net: &NetConfig, config: &TrainConfig, images: &[Vec<f32>], labels: &[usize]) -> Result<Trained> {
    let params = NetParams::init(net)?;
    train_from(params, config, images, labels)
}

/// Trains on the frames of one split of a corpus, labelled by combination.
pub fn train_manifest(
    net: &NetConfig,
    config: &TrainConfig,
    manifest: &Manifest,
    root: &Path,
    bounds: DepthBounds,
    split: Split,
) -> Result<Trained> {
    if net.input_size != [manifest.height, manifest.width] {
        return Err(Error::InvalidInput(format!(
            "network expects {:?} images, corpus frames are {}x{}",
            net.input_size, manifest.height, manifest.width
        )));
    }
    let indices = split_indices(manifest, split)?;
    let images = load_images(manifest, root, &indices, bounds)?;
    let labels: Vec<usize> = indices.iter().map(|&i| manifest.samples[i].combination).collect();
    train(net, config, &images, &labels)
}

pub fn train_from(
    mut params: NetParams,
    config: &TrainConfig,
    images: &[Vec<f32>],
    labels: &[usize],
) -> Result<Trained> {
    config.validate()?;
    if images.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    let sampler = TripletSampler::new(labels)?;
    let per_epoch = config.triplets_per_epoch.unwrap_or(images.len()).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(&params, config);
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let lr = config.learning_rate_at(epoch);
        let mut loss_sum = 0.0;
        let mut drawn = 0;
        while drawn < per_epoch {
            let n = config.batch_size.min(per_epoch - drawn);
            let batch: Vec<TripletImages<'_>> = (0..n)
                .map(|_| {
                    let t = sampler.sample(&mut rng);
                    [&images[t.anchor][..], &images[t.positive][..], &images[t.negative][..]]
                })
                .collect();
            let (loss, grads) = triplet_gradients(&params, &batch, config.margin)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            adam.step(&mut params, &grads, lr);
            if params.blocks.iter().any(|b| b.values.iter().any(|v| !v.is_finite())) {
                return Err(Error::Divergence { epoch, loss: f64::NAN });
            }
            loss_sum += loss * n as f64;
            drawn += n;
        }
        let mean_loss = loss_sum / per_epoch as f64;
        log::info!("epoch {epoch}: lr {lr:e}, loss {mean_loss:.5}");
        history.push(EpochStats {
            epoch,
            learning_rate: lr,
            mean_loss,
        });
    }
    params.round_to_f32();
    // weights past f32 range cannot be stored
    if params.blocks.iter().any(|b| b.values.iter().any(|v| !v.is_finite())) {
        let loss = history.last().map_or(f64::NAN, |h| h.mean_loss);
        return Err(Error::Divergence {
            epoch: config.epochs.saturating_sub(1),
            loss,
        });
    }
    Ok(Trained { params, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toy() -> NetConfig {
        NetConfig {
            input_size: [8, 8],
            conv_channels: vec![2],
            kernel_size: 3,
            pool: 2,
            fc_widths: vec![8, 4, 2],
            prelu_init: 0.25,
            seed: 1,
        }
    }

    /// Two classes: bright blob top-left vs bottom-right, with noise.
    fn corpus() -> (Vec<Vec<f32>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for label in 0..2 {
            for _ in 0..20 {
                let im = (0..64)
                    .map(|i| {
                        let (r, c) = (i / 8, i % 8);
                        let on = if label == 0 { r < 4 && c < 4 } else { r >= 4 && c >= 4 };
                        (if on { 0.8 } else { 0.1 }) + rng.random_range(-0.05..0.05f32)
                    })
                    .collect();
                images.push(im);
                labels.push(label);
            }
        }
        (images, labels)
    }

    fn schedule(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 8,
            learning_rate: 1e-2,
            triplets_per_epoch: Some(64),
            seed: 4,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn loss_decreases_on_separable_corpus() {
        let (images, labels) = corpus();
        let out = train(&toy(), &schedule(10), &images, &labels).unwrap();
        let first = out.history[0].mean_loss;
        let last = out.history.last().unwrap().mean_loss;
        assert!(last < first, "{first} -> {last}");
    }

    #[test]
    fn training_is_reproducible() {
        let (images, labels) = corpus();
        let a = train(&toy(), &schedule(3), &images, &labels).unwrap();
        let b = train(&toy(), &schedule(3), &images, &labels).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn history_follows_step_schedule() {
        let (images, labels) = corpus();
        let cfg = TrainConfig {
            lr_step: 2,
            triplets_per_epoch: Some(8),
            ..schedule(5)
        };
        let out = train(&toy(), &cfg, &images, &labels).unwrap();
        let lrs: Vec<f64> = out.history.iter().map(|h| h.learning_rate).collect();
        assert_eq!(lrs.len(), 5);
        assert_eq!(lrs[0], 1e-2);
        assert!((lrs[2] - 1e-3).abs() < 1e-15 && (lrs[4] - 1e-4).abs() < 1e-16);
    }

    #[test]
    fn single_label_corpus_is_rejected() {
        let (images, _) = corpus();
        let labels = vec![0; images.len()];
        assert!(train(&toy(), &schedule(1), &images, &labels).is_err());
    }

    #[test]
    fn huge_learning_rate_is_reported() {
        let (images, labels) = corpus();
        let cfg = TrainConfig {
            learning_rate: 1e300,
            ..schedule(3)
        };
        match train(&toy(), &cfg, &images, &labels) {
            Err(Error::Divergence { .. }) | Err(Error::NonFiniteGradient { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
