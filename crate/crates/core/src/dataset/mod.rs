//! Labelled corpora: parameter combinations, on-disk frame layout, the
//! manifest that indexes it, and triplet sampling for training.

mod generate;
mod ingest;
mod manifest;
mod triplet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{PhysicalParams, RunConfig};
use crate::error::{Error, Result};

pub use generate::{
    combination_rng, generate_combinations, generate_dataset, generate_target, plan_samples, render_sequences,
    DatasetPlan,
};
pub use ingest::{ingest_capture, CaptureMeta};
pub use manifest::{
    load_images, load_sequence, Failure, Manifest, ManifestKind, Sample, Truth,
    MANIFEST_FILE, MANIFEST_VERSION,
};
pub use triplet::{holdout_split, sample_triplet, split_indices, Split, Triplet, TripletSampler};

/// One labelled point of the search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Combination {
    pub id: usize,
    pub stiffness_scale: f64,
    /// m/s
    pub wind_speed: f64,
    /// kg/m²
    pub area_weight: f64,
    pub material: String,
}

impl Combination {
    pub fn params(&self) -> PhysicalParams {
        PhysicalParams {
            stiffness_scale: self.stiffness_scale,
            wind_speed: self.wind_speed,
            area_weight: self.area_weight,
        }
    }
}

/// Draws `n` independent uniform points from the material's search box.
pub fn sample_combinations<R: Rng + ?Sized>(
    config: &RunConfig,
    material: &str,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Combination>> {
    let spec = config.material(material)?;
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 combinations, got {n}")));
    }
    let space = config.scene.search_space(spec);
    Ok((0..n)
        .map(|id| {
            let [s, w, a] = space.bounds.map(|[lo, hi]| rng.random_range(lo..=hi));
            Combination {
                id,
                stiffness_scale: s,
                wind_speed: w,
                area_weight: a,
                material: material.to_string(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn thirty_gray_interlock_combos_stay_in_range() {
        let cfg = RunConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let combos = sample_combinations(&cfg, "gray_interlock", 30, &mut rng).unwrap();
        assert_eq!(combos.len(), 30);
        for (i, c) in combos.iter().enumerate() {
            assert_eq!(c.id, i);
            assert!((0.15..=0.22).contains(&c.area_weight));
            assert!((1.0..=6.0).contains(&c.wind_speed));
            assert!((0.1..=10.0).contains(&c.stiffness_scale));
        }
    }

    #[test]
    fn same_seed_same_combos() {
        let cfg = RunConfig::default();
        let a = sample_combinations(&cfg, "pink_nylon", 2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = sample_combinations(&cfg, "pink_nylon", 2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_unknown_material_and_tiny_n() {
        let cfg = RunConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_combinations(&cfg, "velvet", 5, &mut rng),
            Err(Error::Config(_))
        ));
        assert!(sample_combinations(&cfg, "pink_nylon", 1, &mut rng).is_err());
    }

    #[test]
    fn empirical_means_sit_at_box_centre() {
        let cfg = RunConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let combos = sample_combinations(&cfg, "black_denim", 10_000, &mut rng).unwrap();
        let n = combos.len() as f64;
        let mean = |f: fn(&Combination) -> f64| combos.iter().map(f).sum::<f64>() / n;
        let centre = cfg.scene.search_space(cfg.material("black_denim").unwrap()).center();
        for (m, c) in [
            (mean(|c| c.stiffness_scale), centre.stiffness_scale),
            (mean(|c| c.wind_speed), centre.wind_speed),
            (mean(|c| c.area_weight), centre.area_weight),
        ] {
            assert!((m - c).abs() / c < 0.02, "mean {m} vs centre {c}");
        }
    }
}
