use rand::Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::gp::GpState;
use crate::registry::Registry;

/// Scores a candidate from its posterior mean and variance, for
/// maximization against the incumbent value `best`.
pub trait Acquisition: Send + Sync {
    fn name(&self) -> &'static str;
    fn score(&self, mean: f64, variance: f64, best: f64) -> f64;
}

pub struct ExpectedImprovement;

/// `mean + kappa * sd` with `kappa = 2`.
pub struct UpperConfidenceBound;

/// Closed-form `E[max(0, f - best)]` for `f ~ N(mean, variance)`.
pub fn expected_improvement(mean: f64, variance: f64, best: f64) -> f64 {
    let sd = variance.max(0.0).sqrt();
    let gain = mean - best;
    if sd <= 0.0 {
        return gain.max(0.0);
    }
    let z = gain / sd;
    let n = Normal::standard();
    (gain * n.cdf(z) + sd * n.pdf(z)).max(0.0)
}

impl Acquisition for ExpectedImprovement {
    fn name(&self) -> &'static str {
        "ei"
    }

    fn score(&self, mean: f64, variance: f64, best: f64) -> f64 {
        expected_improvement(mean, variance, best)
    }
}

impl Acquisition for UpperConfidenceBound {
    fn name(&self) -> &'static str {
        "ucb"
    }

    fn score(&self, mean: f64, variance: f64, _best: f64) -> f64 {
        mean + 2.0 * variance.max(0.0).sqrt()
    }
}

pub fn acquisitions() -> Registry<dyn Acquisition> {
    Registry::<dyn Acquisition>::new("acquisition")
        .with("ei", || Box::new(ExpectedImprovement))
        .with("ucb", || Box::new(UpperConfidenceBound))
}

/// Search effort for maximizing the acquisition over `[-1, 1]^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposeSettings {
    pub candidates: usize,
    pub refine_starts: usize,
    pub initial_step: f64,
    pub min_step: f64,
}

impl Default for ProposeSettings {
    fn default() -> Self {
        Self {
            candidates: 1024,
            refine_starts: 8,
            initial_step: 0.25,
            min_step: 1e-4,
        }
    }
}

/// Maximizes the acquisition: uniform random candidates, then a shrinking
/// coordinate search from the best few. Returns the point and its score.
pub fn propose_next<R: Rng + ?Sized>(
    gp: &GpState,
    acquisition: &dyn Acquisition,
    best: f64,
    settings: &ProposeSettings,
    rng: &mut R,
) -> (Vec<f64>, f64) {
    let dim = gp.dim();
    let score = |x: &[f64]| {
        let (m, v) = gp.posterior(x);
        acquisition.score(m, v, best)
    };
    let mut scored: Vec<(f64, Vec<f64>)> = (0..settings.candidates.max(1))
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
            (score(&x), x)
        })
        .collect();
    // stable: equal scores keep draw order
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut winner = scored[0].clone();
    for (s0, x0) in scored.into_iter().take(settings.refine_starts.max(1)) {
        let (mut s, mut x) = (s0, x0);
        let mut step = settings.initial_step;
        while step >= settings.min_step {
            let mut moved = false;
            for d in 0..dim {
                for dir in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[d] = (y[d] + dir * step).clamp(-1.0, 1.0);
                    let sy = score(&y);
                    if sy > s {
                        s = sy;
                        x = y;
                        moved = true;
                    }
                }
            }
            if !moved {
                step /= 2.0;
            }
        }
        if s > winner.0 {
            winner = (s, x);
        }
    }
    (winner.1, winner.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bo::gp::GpConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn ei_examples() {
        assert_eq!(expected_improvement(1.0, 0.0, 1.0), 0.0);
        assert_eq!(expected_improvement(0.5, 0.0, 1.0), 0.0);
        assert!((expected_improvement(1.0, 1.0, 1.0) - 0.398_942_280_401_432_7).abs() < 1e-12);
    }

    #[test]
    fn ei_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (mean, var, best) in [(0.3, 0.5, 0.1), (-1.0, 2.0, 0.5), (0.0, 0.04, 0.2)] {
            let sd: f64 = f64::sqrt(var);
            let n = 1_000_000;
            let mc: f64 = (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (mean + sd * z - best).max(0.0)
                })
                .sum::<f64>()
                / n as f64;
            assert!((mc - expected_improvement(mean, var, best)).abs() < 1e-3);
        }
    }

    fn quadratic_gp(rng: &mut ChaCha8Rng) -> (GpState, f64) {
        let x: Vec<Vec<f64>> = [-0.8, -0.3, 0.1, 0.6, 0.9].iter().map(|v| vec![*v]).collect();
        let y: Vec<f64> = x.iter().map(|p| -(p[0] - 0.3f64).powi(2)).collect();
        let best = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (GpState::fit(&x, &y, &GpConfig::default(), rng).unwrap(), best)
    }

    #[test]
    fn proposal_stays_in_box_and_beats_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (gp, best) = quadratic_gp(&mut rng);
        let settings = ProposeSettings {
            candidates: 64,
            ..ProposeSettings::default()
        };
        let ei = ExpectedImprovement;
        let (x, s) = propose_next(&gp, &ei, best, &settings, &mut ChaCha8Rng::seed_from_u64(3));
        assert!(x[0].abs() <= 1.0);
        // replay the same candidate draws
        let mut replay = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..64 {
            let c: f64 = replay.random_range(-1.0..=1.0);
            let (m, v) = gp.posterior(&[c]);
            assert!(s >= ei.score(m, v, best));
        }
    }

    #[test]
    fn proposal_is_deterministic_per_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (gp, best) = quadratic_gp(&mut rng);
        let s = ProposeSettings::default();
        let a = propose_next(&gp, &ExpectedImprovement, best, &s, &mut ChaCha8Rng::seed_from_u64(9));
        let b = propose_next(&gp, &ExpectedImprovement, best, &s, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn ei_vanishes_at_noise_free_incumbent() {
        let cfg = GpConfig {
            noise_variance: 0.0,
            fit_hyperparameters: false,
            ..GpConfig::default()
        };
        let x = vec![vec![-0.5, 0.0], vec![0.4, 0.2], vec![0.0, -0.7]];
        let y = vec![1.0, 3.0, 2.0];
        let gp = GpState::fit(&x, &y, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let (m, v) = gp.posterior(&x[1]);
        assert!(expected_improvement(m, v, 3.0) <= 1e-9);
    }
}
