use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Manifest;
use crate::error::{Error, Result};

/// Sample indices of one training triplet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
}

/// Uniform random triplets over a labelled sample set.
#[derive(Debug, Clone)]
pub struct TripletSampler {
    labels: Vec<usize>,
    groups: BTreeMap<usize, Vec<usize>>,
}

impl TripletSampler {
    /// `labels[i]` is the label of sample `i`. Needs at least two labels and
    /// at least two samples under each.
    pub fn new(labels: &[usize]) -> Result<Self> {
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            groups.entry(l).or_default().push(i);
        }
        if groups.len() < 2 {
            return Err(Error::Sampling(format!(
                "triplets need at least 2 labels, found {}",
                groups.len()
            )));
        }
        if let Some((l, _)) = groups.iter().find(|(_, g)| g.len() < 2) {
            return Err(Error::Sampling(format!("label {l} has a single sample, no positive exists")));
        }
        Ok(Self {
            labels: labels.to_vec(),
            groups,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Triplet {
        let n = self.labels.len();
        let anchor = rng.random_range(0..n);
        let label = self.labels[anchor];
        let same = &self.groups[&label];
        // uniform over the group minus the anchor
        let mut k = rng.random_range(0..same.len() - 1);
        if same[k] >= anchor {
            k += 1;
        }
        let positive = same[k];
        let others = n - same.len();
        let mut r = rng.random_range(0..others);
        let mut negative = 0;
        for (l, g) in &self.groups {
            if *l == label {
                continue;
            }
            if r < g.len() {
                negative = g[r];
                break;
            }
            r -= g.len();
        }
        Triplet {
            anchor,
            positive,
            negative,
        }
    }
}

pub fn sample_triplet<R: Rng + ?Sized>(manifest: &Manifest, rng: &mut R) -> Result<Triplet> {
    Ok(TripletSampler::new(&manifest.labels())?.sample(rng))
}

/// Splits sample indices into (train, held-out). The last camera of every
/// combination is held out; with a single camera nothing can be held out.
pub fn holdout_split(manifest: &Manifest) -> Result<(Vec<usize>, Vec<usize>)> {
    if manifest.cameras < 2 {
        return Err(Error::InvalidInput(
            "holding out a camera needs at least 2 cameras per combination".into(),
        ));
    }
    let held = manifest.cameras - 1;
    Ok((0..manifest.samples.len()).partition(|&i| manifest.samples[i].camera != held))
}

/// Which samples of a corpus to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    All,
    /// Every camera but the last.
    Train,
    /// The last camera only.
    Holdout,
}

pub fn split_indices(manifest: &Manifest, split: Split) -> Result<Vec<usize>> {
    match split {
        Split::All => Ok((0..manifest.samples.len()).collect()),
        Split::Train => Ok(holdout_split(manifest)?.0),
        Split::Holdout => Ok(holdout_split(manifest)?.1),
    }
}
