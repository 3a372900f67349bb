//! Clustering accuracy of labelled points on the similarity map.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{load_images, split_indices, Manifest, Split};
use crate::embed::{psd, NetParams, PsmPoint};
use crate::render::DepthBounds;
use crate::error::{Error, Result};
use crate::registry::Registry;

/// Assigns every point a predicted label from the other points.
pub trait ClusterMetric: Send + Sync {
    fn name(&self) -> &'static str;
    /// `labels` are dense indices `0..n_labels`.
    fn predict(&self, points: &[PsmPoint], labels: &[usize], n_labels: usize) -> Vec<usize>;
}

/// Leave-one-out 1-nearest-neighbour by squared distance. Equal distances
/// resolve to the lower label.
pub struct LooNearestNeighbour;

/// Leave-one-out nearest class centroid; the query is excluded from its own
/// class mean.
pub struct NearestCentroid;

impl ClusterMetric for LooNearestNeighbour {
    fn name(&self) -> &'static str {
        "loo-1nn"
    }

    fn predict(&self, points: &[PsmPoint], labels: &[usize], _n_labels: usize) -> Vec<usize> {
        use rayon::prelude::*;
        (0..points.len())
            .into_par_iter()
            .map(|i| {
                let mut best = (f64::INFINITY, usize::MAX);
                for (j, p) in points.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    let cand = (psd(points[i], *p), labels[j]);
                    if cand.0 < best.0 || (cand.0 == best.0 && cand.1 < best.1) {
                        best = cand;
                    }
                }
                best.1
            })
            .collect()
    }
}

impl ClusterMetric for NearestCentroid {
    fn name(&self) -> &'static str {
        "nearest-centroid"
    }

    fn predict(&self, points: &[PsmPoint], labels: &[usize], n_labels: usize) -> Vec<usize> {
        let mut sum = vec![(0.0, 0.0, 0usize); n_labels];
        for (p, &l) in points.iter().zip(labels) {
            sum[l].0 += p.x;
            sum[l].1 += p.y;
            sum[l].2 += 1;
        }
        points
            .iter()
            .zip(labels)
            .map(|(p, &own)| {
                let mut best = (f64::INFINITY, usize::MAX);
                for (l, &(sx, sy, n)) in sum.iter().enumerate() {
                    let (sx, sy, n) = if l == own { (sx - p.x, sy - p.y, n - 1) } else { (sx, sy, n) };
                    if n == 0 {
                        continue;
                    }
                    let c = PsmPoint::new(sx / n as f64, sy / n as f64);
                    let d = psd(*p, c);
                    if d < best.0 {
                        best = (d, l);
                    }
                }
                best.1
            })
            .collect()
    }
}

pub fn metrics() -> Registry<dyn ClusterMetric> {
    Registry::<dyn ClusterMetric>::new("clustering metric")
        .with("loo-1nn", || Box::new(LooNearestNeighbour))
        .with("nearest-centroid", || Box::new(NearestCentroid))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub material: String,
    pub metric: String,
    pub accuracy: f64,
    pub n_samples: usize,
    /// Label ids in ascending order; they index the confusion matrix.
    pub labels: Vec<usize>,
    /// `confusion[t][p]` counts points with true label `labels[t]`
    /// predicted as `labels[p]`.
    pub confusion: Vec<Vec<usize>>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Aligned-column confusion table with the accuracy underneath.
    pub fn to_table(&self) -> String {
        let head: Vec<String> = std::iter::once("true\\pred".to_string())
            .chain(self.labels.iter().map(|l| l.to_string()))
            .chain(std::iter::once("total".to_string()))
            .collect();
        let mut rows = vec![head];
        for (t, row) in self.confusion.iter().enumerate() {
            let mut r = vec![self.labels[t].to_string()];
            r.extend(row.iter().map(|c| c.to_string()));
            r.push(row.iter().sum::<usize>().to_string());
            rows.push(r);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in &rows {
            let cells: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
            writeln!(out, "{}", cells.join("  ")).unwrap();
        }
        writeln!(
            out,
            "{} {} accuracy {:.4} ({} of {})",
            self.material,
            self.metric,
            self.accuracy,
            self.confusion.iter().enumerate().map(|(i, r)| r[i]).sum::<usize>(),
            self.n_samples
        )
        .unwrap();
        out
    }
}

/// Scores how well `metric` recovers each point's label from the others.
pub fn clustering_accuracy(points: &[(PsmPoint, usize)], metric: &dyn ClusterMetric, material: &str) -> Result<EvalReport> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for (_, l) in points {
        *counts.entry(*l).or_default() += 1;
    }
    if counts.len() < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 labels, found {}", counts.len())));
    }
    if let Some((l, _)) = counts.iter().find(|(_, &n)| n < 2) {
        return Err(Error::InvalidInput(format!("label {l} has fewer than 2 points")));
    }
    if points.iter().any(|(p, _)| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::InvalidInput("map points must be finite".into()));
    }
    let labels: Vec<usize> = counts.keys().copied().collect();
    let dense: BTreeMap<usize, usize> = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    let pts: Vec<PsmPoint> = points.iter().map(|(p, _)| *p).collect();
    let truth: Vec<usize> = points.iter().map(|(_, l)| dense[l]).collect();
    let predicted = metric.predict(&pts, &truth, labels.len());
    let mut confusion = vec![vec![0; labels.len()]; labels.len()];
    for (t, p) in truth.iter().zip(&predicted) {
        confusion[*t][*p] += 1;
    }
    let correct: usize = (0..labels.len()).map(|i| confusion[i][i]).sum();
    Ok(EvalReport {
        material: material.to_string(),
        metric: metric.name().to_string(),
        accuracy: correct as f64 / points.len() as f64,
        n_samples: points.len(),
        labels,
        confusion,
    })
}

/// Embeds every frame of the chosen split, labelled by its combination,
/// and scores the resulting map.
pub fn evaluate_manifest(
    net: &NetParams,
    manifest: &Manifest,
    root: &Path,
    bounds: DepthBounds,
    split: Split,
    metric: &dyn ClusterMetric,
) -> Result<EvalReport> {
    let indices = split_indices(manifest, split)?;
    let images = load_images(manifest, root, &indices, bounds)?;
    let points = net.forward_batch(&images)?;
    let labelled: Vec<(PsmPoint, usize)> = points
        .into_iter()
        .zip(&indices)
        .map(|(p, &i)| (p, manifest.samples[i].combination))
        .collect();
    clustering_accuracy(&labelled, metric, &manifest.material)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn loo() -> Box<dyn ClusterMetric> {
        metrics().create("loo-1nn").unwrap()
    }

    #[test]
    fn separated_clusters_score_one() {
        let pts: Vec<(PsmPoint, usize)> = (0..5)
            .map(|_| (PsmPoint::new(0.0, 0.0), 0))
            .chain((0..5).map(|_| (PsmPoint::new(10.0, 10.0), 1)))
            .collect();
        let r = clustering_accuracy(&pts, loo().as_ref(), "m").unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.confusion, vec![vec![5, 0], vec![0, 5]]);
    }

    #[test]
    fn identical_points_fall_to_lower_label() {
        let pts: Vec<(PsmPoint, usize)> = (0..8).map(|i| (PsmPoint::new(1.0, 1.0), 3 + i % 2)).collect();
        let r = clustering_accuracy(&pts, loo().as_ref(), "m").unwrap();
        assert!(r.accuracy <= 0.5);
        assert_eq!(r.confusion, vec![vec![4, 0], vec![4, 0]]);
    }

    #[test]
    fn rejects_single_label_and_singletons() {
        let one = [(PsmPoint::new(0.0, 0.0), 1), (PsmPoint::new(1.0, 0.0), 1)];
        assert!(clustering_accuracy(&one, loo().as_ref(), "m").is_err());
        let lonely = [
            (PsmPoint::new(0.0, 0.0), 1),
            (PsmPoint::new(1.0, 0.0), 1),
            (PsmPoint::new(2.0, 0.0), 2),
        ];
        assert!(clustering_accuracy(&lonely, loo().as_ref(), "m").is_err());
    }

    fn random_instance(seed: u64, n: usize, k: usize) -> Vec<(PsmPoint, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let l = i % k;
                let p = PsmPoint::new(l as f64 + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (p, l)
            })
            .collect()
    }

    #[test]
    fn matches_exhaustive_nearest_neighbour() {
        for seed in 0..5 {
            let pts = random_instance(seed, 20, 3);
            let r = clustering_accuracy(&pts, loo().as_ref(), "m").unwrap();
            let mut correct = 0;
            for i in 0..pts.len() {
                let mut d: Vec<(f64, usize)> = (0..pts.len())
                    .filter(|&j| j != i)
                    .map(|j| {
                        let (a, b) = (pts[i].0, pts[j].0);
                        ((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y), pts[j].1)
                    })
                    .collect();
                d.sort_by(|x, y| x.partial_cmp(y).unwrap());
                if d[0].1 == pts[i].1 {
                    correct += 1;
                }
            }
            assert_eq!(r.accuracy, correct as f64 / 20.0);
            assert_eq!(r.confusion.iter().flatten().sum::<usize>(), 20);
        }
    }

    #[test]
    fn nearest_centroid_on_separated_clusters() {
        let pts = random_instance(3, 30, 3)
            .into_iter()
            .map(|(p, l)| (PsmPoint::new(p.x * 0.1 + 5.0 * l as f64, p.y * 0.1), l))
            .collect::<Vec<_>>();
        let m = metrics().create("nearest-centroid").unwrap();
        assert_eq!(clustering_accuracy(&pts, m.as_ref(), "m").unwrap().accuracy, 1.0);
    }

    #[test]
    fn report_formats() {
        let r = clustering_accuracy(&random_instance(1, 12, 2), loo().as_ref(), "gray_interlock").unwrap();
        let table = r.to_table();
        assert_eq!(table.lines().count(), 4);
        assert!(table.contains("accuracy"));
        let back: EvalReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    proptest! {
        #[test]
        fn accuracy_invariant_under_similarity_transforms(
            seed in 0u64..1000,
            angle in 0.0..std::f64::consts::TAU,
            scale in 0.1..10.0f64,
            tx in -100.0..100.0f64,
            ty in -100.0..100.0f64,
        ) {
            let pts = random_instance(seed, 15, 3);
            let (s, c) = angle.sin_cos();
            let moved: Vec<(PsmPoint, usize)> = pts
                .iter()
                .map(|(p, l)| (PsmPoint::new(scale * (c * p.x - s * p.y) + tx, scale * (s * p.x + c * p.y) + ty), *l))
                .collect();
            let a = clustering_accuracy(&pts, loo().as_ref(), "m").unwrap();
            let b = clustering_accuracy(&moved, loo().as_ref(), "m").unwrap();
            prop_assert_eq!(a.accuracy, b.accuracy);
        }
    }
}
