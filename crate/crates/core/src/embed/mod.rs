//! Similarity embedding: a small convolutional network mapping one depth
//! image to a point on a 2-D map, trained with a triplet margin loss so
//! that sequences with similar physics land close together.

mod config;
mod io;
mod layers;
mod net;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::{normalize_depth, DepthBounds, DepthFrame};

pub use config::{ConvShape, FcShape, Layout, NetConfig, TrainConfig};
pub use io::{decode_params, encode_params, load_params, save_params, PARAMS_VERSION};
pub use layers::{
    conv2d_backward, conv2d_forward, linear_backward, linear_forward, maxpool_backward,
    maxpool_forward, prelu_backward, prelu_forward,
};
pub use net::{scaled_triplet_gradients, triplet_gradients, Gradients, NetParams, ParamBlock, TripletImages};
pub use train::{train, train_from, train_manifest, Adam, EpochStats, Trained};

/// A point on the similarity map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsmPoint {
    pub x: f64,
    pub y: f64,
}

impl PsmPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Squared Euclidean distance between two map points.
pub fn psd(p: PsmPoint, q: PsmPoint) -> f64 {
    (p.x - q.x).powi(2) + (p.y - q.y).powi(2)
}

/// `max(0, PP - NP + margin)` with PP, NP the distances of the positive
/// and negative to the anchor.
pub fn triplet_loss(anchor: PsmPoint, positive: PsmPoint, negative: PsmPoint, margin: f64) -> f64 {
    (psd(positive, anchor) - psd(negative, anchor) + margin).max(0.0)
}

/// Mean of a set of map points.
pub fn centroid(points: &[PsmPoint]) -> Result<PsmPoint> {
    if points.is_empty() {
        return Err(Error::InvalidInput("cannot embed an empty sequence".into()));
    }
    let n = points.len() as f64;
    Ok(PsmPoint {
        x: points.iter().map(|p| p.x).sum::<f64>() / n,
        y: points.iter().map(|p| p.y).sum::<f64>() / n,
    })
}

/// Embeds a sequence of normalized images as the centroid of their points.
pub fn embed_sequence(params: &NetParams, images: &[Vec<f32>]) -> Result<PsmPoint> {
    if images.is_empty() {
        return Err(Error::InvalidInput("cannot embed an empty sequence".into()));
    }
    centroid(&params.forward_batch(images)?)
}

/// Normalizes raw depth frames and embeds them as one sequence.
pub fn embed_frames(params: &NetParams, frames: &[DepthFrame], bounds: DepthBounds) -> Result<PsmPoint> {
    let images: Vec<Vec<f32>> = frames.iter().map(|f| normalize_depth(f, bounds)).collect();
    embed_sequence(params, &images)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn psd_examples() {
        let o = PsmPoint::new(0.0, 0.0);
        assert_eq!(psd(o, o), 0.0);
        assert_eq!(psd(o, PsmPoint::new(3.0, 4.0)), 25.0);
    }

    #[test]
    fn triplet_loss_examples() {
        let a = PsmPoint::new(0.0, 0.0);
        let p1 = PsmPoint::new(1.0, 0.0);
        assert_eq!(triplet_loss(a, p1, PsmPoint::new(0.0, 1.0), 1.0), 1.0);
        assert_eq!(triplet_loss(a, a, PsmPoint::new(5f64.sqrt(), 0.0), 1.0), 0.0);
        assert_eq!(triplet_loss(a, PsmPoint::new(1.0, 1.0), p1, 1.0), 2.0);
    }

    #[test]
    fn centroid_examples() {
        let p = PsmPoint::new(0.5, -2.0);
        assert_eq!(centroid(&[p]).unwrap(), p);
        assert_eq!(
            centroid(&[PsmPoint::new(0.0, 0.0), PsmPoint::new(2.0, 2.0)]).unwrap(),
            PsmPoint::new(1.0, 1.0)
        );
        assert!(centroid(&[]).is_err());
    }

    proptest! {
        #[test]
        fn psd_is_symmetric(a in -1e3..1e3f64, b in -1e3..1e3f64, c in -1e3..1e3f64, d in -1e3..1e3f64) {
            let (p, q) = (PsmPoint::new(a, b), PsmPoint::new(c, d));
            prop_assert_eq!(psd(p, q), psd(q, p));
            prop_assert!(psd(p, q) >= 0.0);
        }

        #[test]
        fn triplet_loss_zero_iff_margin_met(
            pts in proptest::collection::vec(-10.0..10.0f64, 6),
            margin in 0.01..5.0f64,
        ) {
            let a = PsmPoint::new(pts[0], pts[1]);
            let p = PsmPoint::new(pts[2], pts[3]);
            let n = PsmPoint::new(pts[4], pts[5]);
            let l = triplet_loss(a, p, n, margin);
            prop_assert!(l >= 0.0);
            prop_assert_eq!(l == 0.0, psd(n, a) >= psd(p, a) + margin);
        }

        #[test]
        fn centroid_ignores_order(pts in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 1..12)) {
            let points: Vec<PsmPoint> = pts.iter().map(|&(x, y)| PsmPoint::new(x, y)).collect();
            let mut rev = points.clone();
            rev.reverse();
            let a = centroid(&points).unwrap();
            let b = centroid(&rev).unwrap();
            prop_assert!((a.x - b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12);
        }
    }
}
